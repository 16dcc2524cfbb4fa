#pragma once

#include <cstdint>
#include <vector>

#include "attnprune/calibration.hpp"
#include "attnprune/weights.hpp"

namespace attnprune {

// Weights act on inputs as Q = X * W_Q, so row i of a factor multiplies
// input feature i. Activation statistics and Hessians are indexed by rows.

/// Euclidean norm of every input feature over the stacked calibration inputs.
std::vector<double> input_feature_norms(const CalibrationSet& set);

/// |w[i,j]| * ||X[:, i]||_2.
DenseMatrix wanda_scores(const DenseMatrix& w, const CalibrationSet& set);

/// Zeroes the floor(rho * d^2) lowest Wanda scores over the whole matrix.
DenseMatrix wanda_mask(const DenseMatrix& w, const CalibrationSet& set, double rho);

/// Zeroes the floor(rho * d^2) smallest |w|.
DenseMatrix magnitude_mask(const DenseMatrix& w, double rho);

/// floor(rho * d^2) zeros at uniformly random positions.
DenseMatrix random_mask(std::size_t d, double rho, std::uint64_t seed);

struct SparseGptResult {
  DenseMatrix weight;  // pruned and compensated, pruned entries exactly 0
  DenseMatrix mask;    // 1 = kept
};

inline constexpr double kDefaultDamp = 0.01;

/// Damped Hessian X^T X + damp * mean(diag) * I of the stacked inputs.
DenseMatrix damped_hessian(const CalibrationSet& set, double damp);

/// OBS pruning per output column of w. Saliency w^2 / [H^-1]_ii is ranked
/// once over the whole matrix; the lowest floor(rho * d^2) are pruned. Inputs
/// are then swept in order, and each pruned weight's error is pushed onto the
/// not-yet-visited inputs of its column through the Cholesky factor of H^-1.
SparseGptResult sparsegpt_prune(const DenseMatrix& w, const CalibrationSet& set, double rho,
                                double damp = kDefaultDamp);

/// Relative attention error when the fused weight is rebuilt from pruned factors.
double baseline_attention_error(const AttentionInstance& inst, const FactoredWeights& fw,
                                const DenseMatrix& mq_applied, const DenseMatrix& mk_applied);

}  // namespace attnprune
