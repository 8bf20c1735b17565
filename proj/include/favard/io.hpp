#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace favard {

/// Shortest decimal text that parses back to the same double.
std::string format_double(double x);

/// 64-bit FNV-1a, rendered as 16 hex digits.
std::string fnv1a_hex(std::string_view bytes);

void write_text_file(const std::filesystem::path& path, std::string_view contents);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace favard
