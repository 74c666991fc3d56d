#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace scnn {

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

// Shortest decimal text that parses back to the same value.
std::string format_exact(double value);
std::string format_exact(float value);
std::string format_fixed(double value, int decimals);

double parse_double(std::string_view text, std::string_view what);
float parse_float(std::string_view text, std::string_view what);
long long parse_int(std::string_view text, std::string_view what);

}  // namespace scnn
