#include "showcast/csv.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <string>

#include "showcast/error.hpp"

namespace showcast {

std::optional<std::vector<std::string>> CsvReader::next() {
  std::vector<std::string> fields;
  std::string field;
  bool in_quotes = false;
  bool any = false;
  record_line_ = line_;
  int c;
  while ((c = in_.get()) != std::char_traits<char>::eof()) {
    any = true;
    const char ch = static_cast<char>(c);
    if (in_quotes) {
      if (ch == '"') {
        if (in_.peek() == '"') {
          in_.get();
          field.push_back('"');
        } else {
          in_quotes = false;
        }
      } else {
        if (ch == '\n') ++line_;
        field.push_back(ch);
      }
      continue;
    }
    if (ch == '"') {
      in_quotes = true;
    } else if (ch == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else if (ch == '\r') {
      if (in_.peek() != '\n') field.push_back(ch);
    } else if (ch == '\n') {
      ++line_;
      fields.push_back(std::move(field));
      return fields;
    } else {
      field.push_back(ch);
    }
  }
  if (in_quotes) {
    throw Error(ErrorCode::TypeError,
                "unterminated quoted field starting on line " + std::to_string(record_line_));
  }
  if (!any) return std::nullopt;
  fields.push_back(std::move(field));
  return fields;
}

void write_csv_field(std::ostream& out, std::string_view field) {
  if (field.find_first_of(",\"\n\r") == std::string_view::npos) {
    out << field;
    return;
  }
  out << '"';
  for (char ch : field) {
    if (ch == '"') out << '"';
    out << ch;
  }
  out << '"';
}

void write_csv_row(std::ostream& out, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out << ',';
    write_csv_field(out, fields[i]);
  }
  out << '\n';
}

std::string format_double(double value) {
  std::array<char, 32> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  return std::string(buf.data(), ptr);
}

std::string format_double_fixed(double value, int decimals, int shift) {
  if (!std::isfinite(value)) return format_double(value);
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value, std::chars_format::scientific);
  if (ec != std::errc{}) return format_double(value);
  const std::string sci(buf.data(), ptr);
  const auto e_pos = sci.find('e');
  const bool negative = sci[0] == '-';
  std::string digits;
  for (std::size_t i = negative ? 1 : 0; i < e_pos; ++i) {
    if (sci[i] != '.') digits += sci[i];
  }
  // value = 0.<digits> * 10^point
  long point = std::stol(sci.substr(e_pos + 1)) + 1 + shift;
  const long keep = point + decimals;
  if (keep < 0) {
    digits.clear();
  } else {
    if (static_cast<long>(digits.size()) <= keep) digits.append(static_cast<std::size_t>(keep) + 1 - digits.size(), '0');
    const bool round_up = digits[static_cast<std::size_t>(keep)] >= '5';
    digits.resize(static_cast<std::size_t>(keep));
    if (round_up) {
      long i = keep - 1;
      for (; i >= 0 && digits[static_cast<std::size_t>(i)] == '9'; --i) digits[static_cast<std::size_t>(i)] = '0';
      if (i >= 0) {
        ++digits[static_cast<std::size_t>(i)];
      } else {
        digits.insert(digits.begin(), '1');
        ++point;
      }
    }
  }
  if (point < 0) {
    digits.insert(0, static_cast<std::size_t>(-point), '0');
    point = 0;
  }
  const std::size_t total = static_cast<std::size_t>(point + decimals);
  if (digits.size() < total) digits.append(total - digits.size(), '0');
  std::string whole = digits.substr(0, static_cast<std::size_t>(point));
  const std::string frac = digits.substr(static_cast<std::size_t>(point));
  const auto nonzero = whole.find_first_not_of('0');
  whole = nonzero == std::string::npos ? "0" : whole.substr(nonzero);
  std::string out;
  if (negative && (whole != "0" || frac.find_first_not_of('0') != std::string::npos)) out += '-';
  out += whole;
  if (decimals > 0) out += '.' + frac;
  return out;
}

}  // namespace showcast
