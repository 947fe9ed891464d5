#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace showcast {

// Flat key/value configuration text shared by schema and profile files.
//
//   # comment line
//   key = value
//
// Keys and values are trimmed of surrounding blanks. Blank lines and lines
// whose first non-blank character is '#' are skipped. A key may appear once.
struct KvEntry {
  std::string key;
  std::string value;
  std::size_t line = 0;
};

std::vector<KvEntry> parse_kv(std::string_view text);
std::vector<KvEntry> read_kv_file(const std::filesystem::path& path);

std::string_view trim(std::string_view s);
std::vector<std::string> split_list(std::string_view value, char sep = ',');
double parse_double(std::string_view token, std::string_view context);

}  // namespace showcast
