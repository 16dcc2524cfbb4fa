#include "attnprune/matrix_io.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>

#include "attnprune/errors.hpp"

namespace attnprune::io {
namespace {

constexpr std::array<char, 4> kMagic{'A', 'T', 'P', 'M'};

void put_u32(std::ostream& out, std::uint32_t v) {
  std::array<char, 4> b{};
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFFu);
  out.write(b.data(), 4);
}

void put_f64(std::ostream& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  std::array<char, 8> b{};
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((bits >> (8 * i)) & 0xFFu);
  out.write(b.data(), 8);
}

std::uint64_t get_le(std::istream& in, int nbytes) {
  std::array<unsigned char, 8> b{};
  in.read(reinterpret_cast<char*>(b.data()), nbytes);
  if (!in) throw NumericError("read_binary: truncated matrix file");
  std::uint64_t v = 0;
  for (int i = 0; i < nbytes; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

std::string format_double(double v) {
  std::array<char, 64> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return {buf.data(), end};
}

}  // namespace

void write_binary(std::ostream& out, const DenseMatrix& m) {
  if (m.rows() > std::numeric_limits<std::uint32_t>::max() ||
      m.cols() > std::numeric_limits<std::uint32_t>::max()) {
    throw ShapeError("write_binary: matrix too large: " + m.shape_string());
  }
  out.write(kMagic.data(), kMagic.size());
  put_u32(out, static_cast<std::uint32_t>(m.rows()));
  put_u32(out, static_cast<std::uint32_t>(m.cols()));
  for (double v : m.data()) put_f64(out, v);
}

DenseMatrix read_binary(std::istream& in) {
  std::array<char, 4> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) throw NumericError("read_binary: bad magic, expected ATPM");
  const auto rows = static_cast<std::size_t>(get_le(in, 4));
  const auto cols = static_cast<std::size_t>(get_le(in, 4));
  std::vector<double> data(rows * cols);
  for (double& v : data) v = std::bit_cast<double>(get_le(in, 8));
  return {rows, cols, std::move(data)};
}

void save_binary(const std::filesystem::path& path, const DenseMatrix& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_binary(out, m);
}

DenseMatrix load_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return read_binary(in);
}

void write_csv(std::ostream& out, const DenseMatrix& m) {
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (j > 0) out << ',';
      out << format_double(m(i, j));
    }
    out << '\n';
  }
}

DenseMatrix read_csv(std::istream& in) {
  std::vector<double> data;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::size_t count = 0;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      double v = 0.0;
      const char* first = cell.data();
      while (first < cell.data() + cell.size() && *first == ' ') ++first;
      auto [ptr, ec] = std::from_chars(first, cell.data() + cell.size(), v);
      if (ec != std::errc{}) {
        throw NumericError("read_csv: bad number '" + cell + "' on row " + std::to_string(rows));
      }
      data.push_back(v);
      ++count;
    }
    if (rows == 0) cols = count;
    if (count != cols) throw ShapeError("read_csv: ragged row " + std::to_string(rows));
    ++rows;
  }
  return {rows, cols, std::move(data)};
}

void save_csv(const std::filesystem::path& path, const DenseMatrix& m) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_csv(out, m);
}

DenseMatrix load_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return read_csv(in);
}

DenseMatrix load_matrix(const std::filesystem::path& path) {
  return path.extension() == ".csv" ? load_csv(path) : load_binary(path);
}

}  // namespace attnprune::io
