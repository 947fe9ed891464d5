#include "showcast/kvconfig.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "showcast/error.hpp"

namespace showcast {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_list(std::string_view value, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = value.find(sep, start);
    out.emplace_back(trim(value.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

double parse_double(std::string_view token, std::string_view context) {
  token = trim(token);
  double value = 0.0;
  const auto* end = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(token.data(), end, value);
  if (token.empty() || ec != std::errc{} || ptr != end) {
    throw Error(ErrorCode::Config,
                std::string(context) + ": expected a number, got '" + std::string(token) + "'");
  }
  return value;
}

std::vector<KvEntry> parse_kv(std::string_view text) {
  std::vector<KvEntry> entries;
  std::set<std::string, std::less<>> seen;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    ++line_no;
    const auto line = trim(text.substr(start, end - start));
    start = end + 1;
    if (line.empty() || line.front() == '#') {
      if (end == text.size()) break;
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorCode::Config,
                  "line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    KvEntry entry{std::string(trim(line.substr(0, eq))), std::string(trim(line.substr(eq + 1))),
                  line_no};
    if (entry.key.empty()) {
      throw Error(ErrorCode::Config, "line " + std::to_string(line_no) + ": empty key");
    }
    if (!seen.insert(entry.key).second) {
      throw Error(ErrorCode::Config,
                  "line " + std::to_string(line_no) + ": duplicate key '" + entry.key + "'");
    }
    entries.push_back(std::move(entry));
    if (end == text.size()) break;
  }
  return entries;
}

std::vector<KvEntry> read_kv_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_kv(buffer.str());
}

}  // namespace showcast
