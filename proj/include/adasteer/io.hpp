#ifndef ADASTEER_IO_HPP
#define ADASTEER_IO_HPP

#include <filesystem>
#include <string>
#include <string_view>

namespace adasteer::io {

// Writes to a sibling temp file and renames it over the target.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);

std::string read_file(const std::filesystem::path& path);

// Shortest-exact decimal (17 significant digits), locale independent.
std::string format_real(double value);

// Escapes a CSV field when it contains a comma, quote or newline.
std::string csv_field(std::string_view text);

}  // namespace adasteer::io

#endif  // ADASTEER_IO_HPP
