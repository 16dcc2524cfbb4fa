#pragma once

#include "attnprune/attention.hpp"
#include "attnprune/calibration.hpp"

namespace attnprune {

/// L(M) = attn + reg with attn = 1/2 ||f - f~(M)||_F^2 and
/// reg = 1/2 lambda_tilde ||M||_F^2.
struct LossBreakdown {
  double attn = 0.0;
  double reg = 0.0;
  double total = 0.0;
};

/// Intermediates of the closed-form gradient, all n x n except grad (d x d):
///   c  = f~ - f
///   p1 = c o f~
///   p2 = diag(p1 * 1) f~
///   p  = p1 - p2
///   grad = W o (X^T p X) + lambda_tilde * M
struct GradientParts {
  DenseMatrix c;
  DenseMatrix p1;
  DenseMatrix p2;
  DenseMatrix p;
  DenseMatrix grad;
};

LossBreakdown loss(const AttentionInstance& inst, const DenseMatrix& mask, double lambda_tilde);

/// Same as loss() but reuses a precomputed reference f.
LossBreakdown loss(const AttentionInstance& inst, const SoftmaxMatrix& reference,
                   const DenseMatrix& mask, double lambda_tilde);

GradientParts gradient(const AttentionInstance& inst, const DenseMatrix& mask,
                       double lambda_tilde);

/// Central differences (L(M + h E_ij) - L(M - h E_ij)) / 2h for every entry.
DenseMatrix fd_gradient(const AttentionInstance& inst, const DenseMatrix& mask,
                        double lambda_tilde, double h = 1e-5);

/// Per-sample quantities the batch gradient needs.
struct SampleBackward {
  double attn = 0.0;  // L_attn of this sample
  DenseMatrix xtpx;   // X^T p X, d x d
};

SampleBackward sample_backward(const AttentionInstance& inst, const SoftmaxMatrix& reference,
                               const DenseMatrix& mask);

struct BatchEvaluation {
  DenseMatrix bracket;     // W o (sum_j X_j^T p_j X_j) + lambda_tilde * M
  double attn_mean = 0.0;  // mean L_attn over the set
};

/// Samples evaluated in parallel, summed in index order.
BatchEvaluation evaluate_batch(const CalibrationSet& set, const DenseMatrix& mask,
                               double lambda_tilde);
/// Serial reference for evaluate_batch; results are bitwise identical.
BatchEvaluation evaluate_batch_serial(const CalibrationSet& set, const DenseMatrix& mask,
                                      double lambda_tilde);

/// The un-averaged update bracket W o (sum_j X_j^T p_j X_j) + lambda_tilde M.
DenseMatrix batch_gradient(const CalibrationSet& set, const DenseMatrix& mask,
                           double lambda_tilde);

}  // namespace attnprune
