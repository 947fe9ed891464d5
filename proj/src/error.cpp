#include "showcast/error.hpp"

namespace showcast {

std::string_view error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::SchemaMismatch: return "SchemaMismatch";
    case ErrorCode::TypeError: return "TypeError";
    case ErrorCode::EmptyFile: return "EmptyFile";
    case ErrorCode::AllMissingColumn: return "AllMissingColumn";
    case ErrorCode::MissingGroupColumn: return "MissingGroupColumn";
    case ErrorCode::MissingValues: return "MissingValues";
    case ErrorCode::CalibrationFailure: return "CalibrationFailure";
    case ErrorCode::TooFewRows: return "TooFewRows";
    case ErrorCode::EmptyClass: return "EmptyClass";
    case ErrorCode::SingleClass: return "SingleClass";
    case ErrorCode::DegenerateTarget: return "DegenerateTarget";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::InvalidParams: return "InvalidParams";
    case ErrorCode::EmptyShownSubset: return "EmptyShownSubset";
    case ErrorCode::CorruptBundle: return "CorruptBundle";
    case ErrorCode::Io: return "Io";
    case ErrorCode::Config: return "Config";
  }
  return "Unknown";
}

}  // namespace showcast
