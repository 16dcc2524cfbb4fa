#pragma once

#include <cstddef>

#include "attnprune/matrix.hpp"

namespace attnprune {

/// One calibration sample: input x (n x d), fused weight w = W_Q W_K^T
/// (d x d) and the choice of attention mask (causal or all-ones).
class AttentionInstance {
 public:
  AttentionInstance(DenseMatrix x, DenseMatrix w, bool use_causal_mask);

  const DenseMatrix& x() const noexcept { return x_; }
  const DenseMatrix& w() const noexcept { return w_; }
  bool use_causal_mask() const noexcept { return causal_; }
  std::size_t n() const noexcept { return x_.rows(); }
  std::size_t d() const noexcept { return x_.cols(); }

 private:
  DenseMatrix x_;
  DenseMatrix w_;
  bool causal_;
};

/// Row-stochastic n x n attention probabilities. Masked entries are exactly 0.
struct SoftmaxMatrix {
  DenseMatrix probs;
};

/// Largest |score| accepted before exponentiating without a shift.
inline constexpr double kMaxRawScore = 700.0;

/// n x n lower-triangular ones (row >= col).
DenseMatrix causal_mask(std::size_t n);

/// causal_mask(n) or all-ones.
DenseMatrix attention_mask(std::size_t n, bool causal);

/// Raw logits x * w_eff * x^T.
DenseMatrix attention_logits(const DenseMatrix& x, const DenseMatrix& w_eff);

/// exp(X W X^T), unshifted. Throws NumericError when any |score| exceeds
/// kMaxRawScore.
DenseMatrix exp_scores(const AttentionInstance& inst);
/// exp(X (mask o W) X^T), unshifted, same overflow rule.
DenseMatrix exp_scores(const AttentionInstance& inst, const DenseMatrix& mask);

/// Row-normalizes scores o m_c. `scores` must hold positive (exponentiated)
/// values. Throws DegenerateRowError for a row with no unmasked mass.
SoftmaxMatrix masked_softmax(const DenseMatrix& scores, const DenseMatrix& m_c);

/// Softmax of raw logits with per-row max subtraction over the unmasked
/// entries. Equal to masked_softmax(exp(logits), mask) in exact arithmetic.
SoftmaxMatrix softmax_from_logits(const DenseMatrix& logits, bool causal);

/// Attention probabilities of x under an arbitrary effective weight.
SoftmaxMatrix softmax_attention(const DenseMatrix& x, const DenseMatrix& w_eff, bool causal);

/// f: probabilities of the unpruned instance.
SoftmaxMatrix attention_probs(const AttentionInstance& inst);
/// f~(M): probabilities with the pruning mask applied to W.
SoftmaxMatrix attention_probs(const AttentionInstance& inst, const DenseMatrix& mask);

}  // namespace attnprune
