#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace plab {

inline constexpr const char* kVersion = "0.1.0";

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);
std::vector<std::string> split_lines(std::string_view s);

// Whole file as bytes; throws IoError.
std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view contents);
void ensure_dir(const std::string& path);

std::string to_hex(uint64_t v);

}  // namespace plab
