#include "attnprune/kernels.hpp"

#include <cstdlib>
#include <string>

#include "attnprune/errors.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace attnprune::kernels {
namespace {

void check_inner(const DenseMatrix& a, const DenseMatrix& b, std::size_t b_inner) {
  if (a.cols() != b_inner) {
    throw ShapeError("matmul: cannot multiply " + a.shape_string() + " by " + b.shape_string());
  }
}

// Row i of a*b, accumulated in i-k-j order.
inline void product_row(const DenseMatrix& a, const DenseMatrix& b, DenseMatrix& out,
                        std::size_t i) {
  const std::size_t inner = a.cols();
  const std::size_t m = b.cols();
  double* dst = out.row(i).data();
  const double* arow = a.row(i).data();
  for (std::size_t k = 0; k < inner; ++k) {
    const double aik = arow[k];
    const double* brow = b.row(k).data();
    for (std::size_t j = 0; j < m; ++j) dst[j] += aik * brow[j];
  }
}

inline void product_transb_row(const DenseMatrix& a, const DenseMatrix& b, DenseMatrix& out,
                               std::size_t i) {
  const std::size_t inner = a.cols();
  const double* arow = a.row(i).data();
  for (std::size_t j = 0; j < b.rows(); ++j) {
    const double* brow = b.row(j).data();
    double acc = 0.0;
    for (std::size_t k = 0; k < inner; ++k) acc += arow[k] * brow[k];
    out(i, j) = acc;
  }
}

}  // namespace

DenseMatrix matmul_serial(const DenseMatrix& a, const DenseMatrix& b) {
  check_inner(a, b, b.rows());
  DenseMatrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) product_row(a, b, out, i);
  return out;
}

DenseMatrix matmul_parallel(const DenseMatrix& a, const DenseMatrix& b) {
  check_inner(a, b, b.rows());
  DenseMatrix out(a.rows(), b.cols());
  const auto rows = static_cast<long>(a.rows());
#pragma omp parallel for schedule(static) num_threads(max_threads())
  for (long i = 0; i < rows; ++i) product_row(a, b, out, static_cast<std::size_t>(i));
  return out;
}

DenseMatrix matmul_transb_serial(const DenseMatrix& a, const DenseMatrix& b) {
  check_inner(a, b, b.cols());
  DenseMatrix out(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) product_transb_row(a, b, out, i);
  return out;
}

DenseMatrix matmul_transb_parallel(const DenseMatrix& a, const DenseMatrix& b) {
  check_inner(a, b, b.cols());
  DenseMatrix out(a.rows(), b.rows());
  const auto rows = static_cast<long>(a.rows());
#pragma omp parallel for schedule(static) num_threads(max_threads())
  for (long i = 0; i < rows; ++i) product_transb_row(a, b, out, static_cast<std::size_t>(i));
  return out;
}

namespace {
int g_thread_override = 0;
}

int max_threads() {
  if (g_thread_override > 0) return g_thread_override;
  int n = 1;
#ifdef _OPENMP
  n = omp_get_max_threads();
#endif
  if (const char* env = std::getenv("ATTNPRUNE_THREADS")) {
    const int cap = std::atoi(env);
    if (cap > 0 && cap < n) n = cap;
  }
  return n;
}

void set_max_threads(int n) { g_thread_override = n > 0 ? n : 0; }

}  // namespace attnprune::kernels
