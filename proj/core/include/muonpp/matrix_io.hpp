#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>

#include "muonpp/linalg.hpp"

namespace muonpp::io {

// MAT1 text format: first line "rows cols", then `rows` lines of `cols`
// whitespace-separated decimals in shortest round-trip form.

linalg::Matrix read_mat1(std::istream& in);
linalg::Matrix read_mat1_file(const std::filesystem::path& path);
void write_mat1(std::ostream& out, const linalg::Matrix& m);
std::string to_mat1(const linalg::Matrix& m);

/// Shortest round-trip-safe rendering used in every CSV and MAT1 file.
std::string format_double(double x);

/// Writes to a sibling temporary and renames, so readers never observe a
/// partially written file.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

}  // namespace muonpp::io
