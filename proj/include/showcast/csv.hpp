#pragma once

#include <filesystem>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace showcast {

// RFC 4180-style reader: comma separated, optional double-quoted fields with
// "" escapes and embedded newlines. CRLF line endings are accepted.
class CsvReader {
 public:
  explicit CsvReader(std::istream& in) : in_(in) {}

  // Next record, or nullopt at end of input. A trailing empty line is not a record.
  std::optional<std::vector<std::string>> next();

  // 1-based physical line on which the last returned record started.
  std::size_t record_line() const noexcept { return record_line_; }

 private:
  std::istream& in_;
  std::size_t line_ = 1;
  std::size_t record_line_ = 0;
};

void write_csv_field(std::ostream& out, std::string_view field);
void write_csv_row(std::ostream& out, const std::vector<std::string>& fields);

// Shortest text that reads back to exactly the same double.
std::string format_double(double value);

// Fixed notation with `decimals` digits after the point, of value * 10^shift.
// Rounds the shortest decimal representation half away from zero, so 0.7805
// with shift 2 and one decimal gives "78.1".
std::string format_double_fixed(double value, int decimals, int shift = 0);

}  // namespace showcast
