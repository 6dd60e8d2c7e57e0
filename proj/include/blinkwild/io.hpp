#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "blinkwild/image.hpp"

namespace blinkwild {

/// Binary PGM (P5, maxval 255). Values are rounded and clamped on write.
GrayFrame read_pgm(const std::filesystem::path& path);
void write_pgm(const GrayFrame& frame, const std::filesystem::path& path);

/// Shortest decimal text that parses back to the identical double.
std::string format_double(double value);
double parse_double(std::string_view text);
long long parse_int(std::string_view text);

std::vector<std::string_view> split(std::string_view line, char delimiter);

std::string read_text_file(const std::filesystem::path& path);

/// Writes through a sibling temporary file and renames it into place, so a
/// failed write never leaves a truncated output behind.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

}  // namespace blinkwild
