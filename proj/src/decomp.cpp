#include "attnprune/decomp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "attnprune/errors.hpp"

namespace attnprune {
namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

double dot(const double* x, const double* y, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

// Orthogonalizes the rows of `cols` (each row holds one column of the input)
// by Hestenes rotations, accumulating the rotations into the rows of `v`.
// Returns the number of sweeps used, or -1 if the cap was hit.
int jacobi_sweeps(DenseMatrix& cols, DenseMatrix* v, int max_sweeps) {
  const std::size_t n = cols.rows();
  const std::size_t m = cols.cols();
  for (int sweep = 1; sweep <= max_sweeps; ++sweep) {
    bool rotated = false;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        double* ap = cols.row(p).data();
        double* aq = cols.row(q).data();
        const double alpha = dot(ap, ap, m);
        const double beta = dot(aq, aq, m);
        const double gamma = dot(ap, aq, m);
        if (alpha == 0.0 || beta == 0.0) continue;
        if (std::abs(gamma) <= 1e-15 * std::sqrt(alpha * beta)) continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (std::size_t i = 0; i < m; ++i) {
          const double x = ap[i];
          const double y = aq[i];
          ap[i] = c * x - s * y;
          aq[i] = s * x + c * y;
        }
        if (v != nullptr) {
          double* vp = v->row(p).data();
          double* vq = v->row(q).data();
          for (std::size_t i = 0; i < v->cols(); ++i) {
            const double x = vp[i];
            const double y = vq[i];
            vp[i] = c * x - s * y;
            vq[i] = s * x + c * y;
          }
        }
      }
    }
    if (!rotated) return sweep;
  }
  return -1;
}

double off_diagonal_residual(const DenseMatrix& cols) {
  double worst = 0.0;
  const std::size_t m = cols.cols();
  for (std::size_t p = 0; p + 1 < cols.rows(); ++p) {
    for (std::size_t q = p + 1; q < cols.rows(); ++q) {
      const double* ap = cols.row(p).data();
      const double* aq = cols.row(q).data();
      const double denom = std::sqrt(dot(ap, ap, m) * dot(aq, aq, m));
      if (denom > 0.0) worst = std::max(worst, std::abs(dot(ap, aq, m)) / denom);
    }
  }
  return worst;
}

// Replaces rows flagged in `null_rows` by unit vectors orthogonal to every
// other row (Gram-Schmidt against the canonical basis, applied twice).
void complete_orthonormal_rows(DenseMatrix& rows, const std::vector<bool>& null_rows) {
  const std::size_t n = rows.rows();
  const std::size_t m = rows.cols();
  std::size_t next_basis = 0;
  for (std::size_t r = 0; r < n; ++r) {
    if (!null_rows[r]) continue;
    bool placed = false;
    while (!placed && next_basis < m) {
      std::vector<double> cand(m, 0.0);
      cand[next_basis++] = 1.0;
      for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t o = 0; o < n; ++o) {
          if (o == r || (null_rows[o] && o > r)) continue;
          const double proj = dot(cand.data(), rows.row(o).data(), m);
          for (std::size_t i = 0; i < m; ++i) cand[i] -= proj * rows(o, i);
        }
      }
      const double norm = std::sqrt(dot(cand.data(), cand.data(), m));
      if (norm > 1e-8) {
        for (std::size_t i = 0; i < m; ++i) rows(r, i) = cand[i] / norm;
        placed = true;
      }
    }
    if (!placed) throw NumericError("svd: failed to complete orthonormal basis");
  }
}

}  // namespace

SvdResult svd(const DenseMatrix& a, int max_sweeps) {
  if (!a.is_square()) throw ShapeError("svd: square input required, got " + a.shape_string());
  const std::size_t d = a.rows();
  DenseMatrix cols = transpose(a);
  DenseMatrix vrows = DenseMatrix::identity(d);
  if (jacobi_sweeps(cols, &vrows, max_sweeps) < 0) {
    throw NumericError("svd: no convergence after " + std::to_string(max_sweeps) +
                       " sweeps, residual " + std::to_string(off_diagonal_residual(cols)));
  }

  std::vector<double> norms(d);
  for (std::size_t j = 0; j < d; ++j) norms[j] = std::sqrt(dot(cols.row(j).data(), cols.row(j).data(), d));
  std::vector<std::size_t> order(d);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t l, std::size_t r) { return norms[l] > norms[r]; });

  const double smax = d == 0 ? 0.0 : norms[order[0]];
  SvdResult out{DenseMatrix(d, d), std::vector<double>(d), DenseMatrix(d, d)};
  DenseMatrix urows(d, d);
  std::vector<bool> null_rows(d, false);
  for (std::size_t k = 0; k < d; ++k) {
    const std::size_t j = order[k];
    out.s[k] = norms[j];
    if (norms[j] <= kEps * smax * static_cast<double>(d) || norms[j] == 0.0) {
      null_rows[k] = true;
    } else {
      for (std::size_t i = 0; i < d; ++i) urows(k, i) = cols(j, i) / norms[j];
    }
    for (std::size_t i = 0; i < d; ++i) out.v(i, k) = vrows(j, i);
  }
  complete_orthonormal_rows(urows, null_rows);
  out.u = transpose(urows);
  return out;
}

std::vector<double> singular_values(const DenseMatrix& a, int max_sweeps) {
  // Rows of `cols` are the columns of the tall orientation.
  DenseMatrix cols = a.rows() >= a.cols() ? transpose(a) : a;
  if (jacobi_sweeps(cols, nullptr, max_sweeps) < 0) {
    throw NumericError("singular_values: no convergence after " + std::to_string(max_sweeps) +
                       " sweeps, residual " + std::to_string(off_diagonal_residual(cols)));
  }
  std::vector<double> s(cols.rows());
  for (std::size_t j = 0; j < cols.rows(); ++j)
    s[j] = std::sqrt(dot(cols.row(j).data(), cols.row(j).data(), cols.cols()));
  std::sort(s.begin(), s.end(), std::greater<>());
  return s;
}

DenseMatrix cholesky_lower(const DenseMatrix& a) {
  if (!a.is_square()) throw ShapeError("cholesky: square input required, got " + a.shape_string());
  const std::size_t n = a.rows();
  DenseMatrix l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double diag = a(j, j);
    for (std::size_t k = 0; k < j; ++k) diag -= l(j, k) * l(j, k);
    if (!(diag > 0.0) || !std::isfinite(diag)) {
      throw NumericError("cholesky: matrix not positive definite at pivot " + std::to_string(j) +
                         " (value " + std::to_string(diag) + ")");
    }
    l(j, j) = std::sqrt(diag);
    for (std::size_t i = j + 1; i < n; ++i) {
      double acc = a(i, j);
      for (std::size_t k = 0; k < j; ++k) acc -= l(i, k) * l(j, k);
      l(i, j) = acc / l(j, j);
    }
  }
  return l;
}

DenseMatrix inverse_spd(const DenseMatrix& a) {
  const DenseMatrix l = cholesky_lower(a);
  const std::size_t n = a.rows();
  // Invert l by forward substitution, then inv(a) = inv(l)^T inv(l).
  DenseMatrix linv(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    linv(j, j) = 1.0 / l(j, j);
    for (std::size_t i = j + 1; i < n; ++i) {
      double acc = 0.0;
      for (std::size_t k = j; k < i; ++k) acc -= l(i, k) * linv(k, j);
      linv(i, j) = acc / l(i, i);
    }
  }
  DenseMatrix inv(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double acc = 0.0;
      for (std::size_t k = i; k < n; ++k) acc += linv(k, i) * linv(k, j);
      inv(i, j) = acc;
      inv(j, i) = acc;
    }
  }
  return inv;
}

}  // namespace attnprune
