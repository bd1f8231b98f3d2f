#pragma once

#include "kfosu/types.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace kfosu {

// Headered matrix CSV:
//
//   rows,cols
//   v00,v01,...
//   ...
//
// Lines starting with '#' before the header are comments (e.g. wavenumber
// annotations). Values are written with 17 significant digits, LF line
// endings and no trailing newline, so save/load/save is byte-stable.

Matrix load_matrix_csv(const std::filesystem::path& path);
void save_matrix_csv(const Matrix& matrix, const std::filesystem::path& path);

std::string format_matrix_csv(const Matrix& matrix);
Matrix parse_matrix_csv(const std::string& text, const std::string& source = "<memory>");

// printf("%.17g") formatting: 17 significant digits, trailing zeros dropped.
std::string format_double(double value);

// Index lists (acquisition orders) reuse the matrix format with one column.
std::vector<std::size_t> load_index_csv(const std::filesystem::path& path);
void save_index_csv(const std::vector<std::size_t>& indices, const std::filesystem::path& path);

// Dataset directory: Y.csv, C.csv (optional), S.csv (optional), meta.csv.
DatasetBundle load_dataset(const std::filesystem::path& dir);
void save_dataset(const DatasetBundle& bundle, const std::filesystem::path& dir);

}  // namespace kfosu
