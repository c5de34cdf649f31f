#pragma once

#include <string>

#include "alkit/matrix.hpp"

namespace alkit {

// ALFV: magic bytes "ALFV", u32 n, u32 d (little-endian), then n*d IEEE-754
// binary32 values, row-major, little-endian. The on-disk element type is
// float; doubles are narrowed on write.
void write_alfv(const Matrix& m, const std::string& path);
Matrix read_alfv(const std::string& path);

// Plain CSV of decimal numbers, no header. Doubles are printed with %.17g
// so write/read round-trips bit-exactly.
void write_matrix_csv(const Matrix& m, const std::string& path);
Matrix read_matrix_csv(const std::string& path);

// Loads a matrix from either format, keyed on the ALFV magic.
Matrix read_matrix_auto(const std::string& path);

std::string format_double(double v);  // %.17g, deterministic

// Whole-file text helpers; both throw IoError on failure.
void write_text(const std::string& path, const std::string& content);
std::string read_text(const std::string& path);

}  // namespace alkit
