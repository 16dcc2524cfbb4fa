#include "attnprune/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "attnprune/errors.hpp"
#include "attnprune/kernels.hpp"

namespace attnprune {

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {
  if (!std::isfinite(fill)) throw NumericError("DenseMatrix: non-finite fill value");
}

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) {
    throw ShapeError("DenseMatrix: data length " + std::to_string(data_.size()) +
                     " does not match " + shape_string());
  }
  if (!all_finite()) throw NumericError("DenseMatrix: non-finite entry in " + shape_string());
}

DenseMatrix::DenseMatrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw ShapeError("DenseMatrix: ragged initializer");
    data_.insert(data_.end(), r.begin(), r.end());
  }
  if (!all_finite()) throw NumericError("DenseMatrix: non-finite entry in initializer");
}

DenseMatrix DenseMatrix::identity(std::size_t n) {
  DenseMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

DenseMatrix DenseMatrix::diag(std::span<const double> values) {
  DenseMatrix m(values.size(), values.size());
  for (std::size_t i = 0; i < values.size(); ++i) m(i, i) = values[i];
  return m;
}

bool DenseMatrix::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

std::string DenseMatrix::shape_string() const {
  return std::to_string(rows_) + "x" + std::to_string(cols_);
}

void require_same_shape(const DenseMatrix& a, const DenseMatrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + a.shape_string() + " vs " +
                     b.shape_string());
  }
}

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.rows() * a.cols() * b.cols() >= kernels::kParallelWork) {
    return kernels::matmul_parallel(a, b);
  }
  return kernels::matmul_serial(a, b);
}

DenseMatrix matmul_transb(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.rows() * a.cols() * b.rows() >= kernels::kParallelWork) {
    return kernels::matmul_transb_parallel(a, b);
  }
  return kernels::matmul_transb_serial(a, b);
}

DenseMatrix hadamard(const DenseMatrix& a, const DenseMatrix& b) {
  require_same_shape(a, b, "hadamard");
  DenseMatrix out(a.rows(), a.cols());
  auto o = out.data();
  auto x = a.data();
  auto y = b.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = x[i] * y[i];
  return out;
}

DenseMatrix transpose(const DenseMatrix& a) {
  DenseMatrix out(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
  return out;
}

DenseMatrix add(const DenseMatrix& a, const DenseMatrix& b) {
  DenseMatrix out = a;
  axpy(out, 1.0, b);
  return out;
}

DenseMatrix subtract(const DenseMatrix& a, const DenseMatrix& b) {
  require_same_shape(a, b, "subtract");
  DenseMatrix out(a.rows(), a.cols());
  auto o = out.data();
  auto x = a.data();
  auto y = b.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = x[i] - y[i];
  return out;
}

DenseMatrix scale(const DenseMatrix& a, double s) {
  DenseMatrix out = a;
  for (double& v : out.data()) v *= s;
  return out;
}

void axpy(DenseMatrix& a, double s, const DenseMatrix& b) {
  require_same_shape(a, b, "axpy");
  auto x = a.data();
  auto y = b.data();
  for (std::size_t i = 0; i < x.size(); ++i) x[i] += s * y[i];
}

double squared_frobenius_norm(const DenseMatrix& a) {
  double acc = 0.0;
  for (double v : a.data()) acc += v * v;
  return acc;
}

double frobenius_norm(const DenseMatrix& a) { return std::sqrt(squared_frobenius_norm(a)); }

double max_abs(const DenseMatrix& a) {
  double m = 0.0;
  for (double v : a.data()) m = std::max(m, std::abs(v));
  return m;
}

double min_abs(const DenseMatrix& a) {
  if (a.empty()) return 0.0;
  double m = std::abs(a.data()[0]);
  for (double v : a.data()) m = std::min(m, std::abs(v));
  return m;
}

double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b) {
  require_same_shape(a, b, "max_abs_diff");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

std::vector<double> row_sums(const DenseMatrix& a) {
  std::vector<double> out(a.rows(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (double v : a.row(i)) out[i] += v;
  return out;
}

double kth_largest(std::span<const double> values, std::size_t k) {
  if (k < 1 || k > values.size()) {
    throw ArgumentError("kth_largest: rank " + std::to_string(k) + " outside [1, " +
                        std::to_string(values.size()) + "]");
  }
  std::vector<std::size_t> idx(values.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  auto before = [&](std::size_t l, std::size_t r) {
    return values[l] > values[r] || (values[l] == values[r] && l < r);
  };
  std::nth_element(idx.begin(), idx.begin() + static_cast<long>(k - 1), idx.end(), before);
  return values[idx[k - 1]];
}

std::size_t prune_count(double rho, std::size_t total) {
  if (!(rho >= 0.0 && rho <= 1.0)) {
    throw ArgumentError("pruning ratio " + std::to_string(rho) + " outside [0, 1]");
  }
  return std::min(total, static_cast<std::size_t>(std::floor(rho * static_cast<double>(total))));
}

std::vector<std::size_t> smallest_indices(std::span<const double> values, std::size_t count) {
  count = std::min(count, values.size());
  std::vector<std::size_t> idx(values.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  auto before = [&](std::size_t l, std::size_t r) {
    return values[l] < values[r] || (values[l] == values[r] && l < r);
  };
  std::partial_sort(idx.begin(), idx.begin() + static_cast<long>(count), idx.end(), before);
  idx.resize(count);
  return idx;
}

}  // namespace attnprune
