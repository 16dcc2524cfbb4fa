#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "attnprune/attention.hpp"

namespace attnprune {

/// Outcome of one analytical inequality check, or of many merged together.
/// margin = rhs - lhs for upper bounds and lhs - rhs for lower bounds; a
/// check is violated when its margin is below -kTheorySlack.
struct TheoryReport {
  std::string check_name;
  std::size_t instances_tested = 0;
  std::size_t violations = 0;
  double worst_margin = 0.0;
  std::vector<std::string> details;      // one entry per violation
  std::map<std::string, double> metrics;  // e.g. max Lipschitz ratio, xi readings

  bool passed() const noexcept { return violations == 0; }
  /// Folds `other` in: counts add, worst margin is the min, metrics keep the
  /// max except keys starting with "min_".
  void merge(const TheoryReport& other);
};

inline constexpr double kTheorySlack = 1e-9;

/// ||f~||_F <= sqrt(n); ||c||_F <= 2 sqrt(n); ||c o f~||_F <= 2 sqrt(n);
/// ||diag((c o f~) 1)||_F <= 2n.
TheoryReport check_basic_bounds(const AttentionInstance& inst, const DenseMatrix& mask);

/// ||grad L(m1) - grad L(m2)||_F <= (lambda + 30 d n^{7/2} R^6) ||m1 - m2||_F
/// with R = max(1, ||X||_F, ||W||_F).
TheoryReport check_lipschitz(const AttentionInstance& inst, const DenseMatrix& m1,
                             const DenseMatrix& m2, double lambda_tilde);

/// ||X^T B X||_F >= beta ||B||_F with beta = sigma_min(X)^2, n <= d.
TheoryReport check_lower_bound_xbx(const DenseMatrix& x, const DenseMatrix& b);

/// ||B o F - diag((B o F) 1) F||_F >= delta ||B||_F for zero-row-sum B and
/// row-stochastic F with min entry delta > 0.
TheoryReport check_lower_bound_p(const DenseMatrix& b, const DenseMatrix& f);

/// Gradient-dominance inequality
///   ||grad L||_F^2 >= mu/2 (2 L_attn + (2 lambda^2 / mu) ||M||_F^2 - xi)
/// with mu = 2 min|W| beta delta and xi = 12 sqrt(n) max|W| ||X||_F^2 lambda d / mu.
/// Needs an all-ones attention mask and n <= d.
TheoryReport check_pl_inequality(const AttentionInstance& inst, const DenseMatrix& mask,
                                 double lambda_tilde);

/// The constants used by check_pl_inequality.
struct PlConstants {
  double beta = 0.0;
  double delta = 0.0;
  double mu = 0.0;
  double xi = 0.0;            // 12 sqrt(n) form, the one asserted
  double xi_main_form = 0.0;  // 12 n^{-3/2} form, reported only
};
PlConstants pl_constants(const AttentionInstance& inst, const DenseMatrix& mask,
                         double lambda_tilde);

}  // namespace attnprune
