#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace showcast {

enum class ErrorCode {
  SchemaMismatch,
  TypeError,
  EmptyFile,
  AllMissingColumn,
  MissingGroupColumn,
  MissingValues,
  CalibrationFailure,
  TooFewRows,
  EmptyClass,
  SingleClass,
  DegenerateTarget,
  LengthMismatch,
  InvalidParams,
  EmptyShownSubset,
  CorruptBundle,
  Io,
  Config,
};

std::string_view error_code_name(ErrorCode code) noexcept;

/// Data, model or parameter error. The CLI maps these to exit status 1.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace showcast
