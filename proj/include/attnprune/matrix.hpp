#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace attnprune {

/// Row-major dense matrix of doubles. Entries are finite on construction.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data);
  DenseMatrix(std::initializer_list<std::initializer_list<double>> rows);

  static DenseMatrix zeros(std::size_t rows, std::size_t cols) { return {rows, cols, 0.0}; }
  static DenseMatrix ones(std::size_t rows, std::size_t cols) { return {rows, cols, 1.0}; }
  static DenseMatrix identity(std::size_t n);
  static DenseMatrix diag(std::span<const double> values);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }
  bool is_square() const noexcept { return rows_ == cols_; }

  double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * cols_ + j]; }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  std::span<double> row(std::size_t i) noexcept { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const noexcept {
    return {data_.data() + i * cols_, cols_};
  }

  bool all_finite() const noexcept;
  std::string shape_string() const;

  friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);
/// a * b^T.
DenseMatrix matmul_transb(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix hadamard(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix transpose(const DenseMatrix& a);
DenseMatrix add(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix subtract(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix scale(const DenseMatrix& a, double s);
/// a += s * b, in place.
void axpy(DenseMatrix& a, double s, const DenseMatrix& b);

double frobenius_norm(const DenseMatrix& a);
double squared_frobenius_norm(const DenseMatrix& a);
double max_abs(const DenseMatrix& a);
double min_abs(const DenseMatrix& a);
double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b);
std::vector<double> row_sums(const DenseMatrix& a);

/// Value of rank k (1-based) under the order (value desc, index asc).
double kth_largest(std::span<const double> values, std::size_t k);

/// Number of entries pruned at ratio rho out of total: floor(rho * total).
std::size_t prune_count(double rho, std::size_t total);

/// Flat indices of the `count` smallest values under (value asc, index asc).
std::vector<std::size_t> smallest_indices(std::span<const double> values, std::size_t count);

void require_same_shape(const DenseMatrix& a, const DenseMatrix& b, const char* op);

}  // namespace attnprune
