#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace drift {

/// Shortest decimal form that round-trips exactly (std::to_chars).
std::string format_double(double value);

/// Fixed-point with the given number of decimals.
std::string format_fixed(double value, int decimals);

std::string read_file(const std::filesystem::path& path);

/// Write via temp file + rename so partial files are never observed.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

}  // namespace drift
