#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace ivd::csv {

// 17 significant digits: enough to round-trip any double exactly.
std::string format_double(double value);

double parse_double(std::string_view text);
long long parse_int(std::string_view text);

std::vector<std::string_view> split(std::string_view line, std::string_view delimiter);
std::string_view trim(std::string_view text);

std::string read_file(const std::filesystem::path& path);
// Writes to a sibling temp file then renames, so readers never observe a partial file.
void write_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace ivd::csv
