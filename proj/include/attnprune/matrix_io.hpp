#pragma once

#include <filesystem>
#include <iosfwd>

#include "attnprune/matrix.hpp"

namespace attnprune::io {

// Binary layout: "ATPM", u32 LE rows, u32 LE cols, rows*cols f64 LE row-major.
void write_binary(std::ostream& out, const DenseMatrix& m);
DenseMatrix read_binary(std::istream& in);
void save_binary(const std::filesystem::path& path, const DenseMatrix& m);
DenseMatrix load_binary(const std::filesystem::path& path);

// Plain decimal CSV, one matrix row per line, shortest round-trip formatting.
void write_csv(std::ostream& out, const DenseMatrix& m);
DenseMatrix read_csv(std::istream& in);
void save_csv(const std::filesystem::path& path, const DenseMatrix& m);
DenseMatrix load_csv(const std::filesystem::path& path);

/// Loads by extension: ".csv" as CSV, anything else as binary.
DenseMatrix load_matrix(const std::filesystem::path& path);

}  // namespace attnprune::io
