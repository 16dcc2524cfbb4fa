#pragma once

#include "attnprune/matrix.hpp"

namespace attnprune::kernels {

// Both kernels accumulate each output entry over k in ascending order, so
// their results are bitwise identical. The serial one is the reference.
DenseMatrix matmul_serial(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix matmul_parallel(const DenseMatrix& a, const DenseMatrix& b);

/// a * b^T without materializing the transpose.
DenseMatrix matmul_transb_serial(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix matmul_transb_parallel(const DenseMatrix& a, const DenseMatrix& b);

/// Output size (rows*cols*inner) above which matmul() goes parallel.
inline constexpr std::size_t kParallelWork = 1u << 18;

/// Worker count, honouring ATTNPRUNE_THREADS when set.
int max_threads();
void set_max_threads(int n);

}  // namespace attnprune::kernels
