#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace dwe {

std::string read_text_file(const std::filesystem::path& path);

/// Writes to a sibling temporary and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

/// Shortest decimal form that round-trips the double exactly.
std::string format_double(double value);

std::vector<std::string> split(std::string_view text, char sep);

double parse_double(std::string_view text, std::string_view context);

}  // namespace dwe
