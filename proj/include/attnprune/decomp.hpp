#pragma once

#include <vector>

#include "attnprune/matrix.hpp"

namespace attnprune {

struct SvdResult {
  DenseMatrix u;
  std::vector<double> s;  // non-negative, non-increasing
  DenseMatrix v;
};

/// One-sided Jacobi SVD of a square matrix: a = u * diag(s) * v^T.
/// Throws NumericError if the off-diagonal mass has not vanished after
/// `max_sweeps` sweeps.
SvdResult svd(const DenseMatrix& a, int max_sweeps = 60);

/// Singular values of any shape, non-increasing, min(rows, cols) of them.
std::vector<double> singular_values(const DenseMatrix& a, int max_sweeps = 60);

/// Lower-triangular l with a = l * l^T. Throws NumericError when a is not
/// numerically positive definite.
DenseMatrix cholesky_lower(const DenseMatrix& a);

/// Inverse of a symmetric positive definite matrix via Cholesky.
DenseMatrix inverse_spd(const DenseMatrix& a);

}  // namespace attnprune
