#include "attnprune/attention.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "attnprune/errors.hpp"

namespace attnprune {

AttentionInstance::AttentionInstance(DenseMatrix x, DenseMatrix w, bool use_causal_mask)
    : x_(std::move(x)), w_(std::move(w)), causal_(use_causal_mask) {
  if (x_.rows() == 0 || x_.cols() == 0) throw ShapeError("AttentionInstance: empty input x");
  if (w_.rows() != x_.cols() || w_.cols() != x_.cols()) {
    throw ShapeError("AttentionInstance: weight " + w_.shape_string() + " does not match input " +
                     x_.shape_string());
  }
  if (!x_.all_finite() || !w_.all_finite()) throw NumericError("AttentionInstance: non-finite data");
}

DenseMatrix causal_mask(std::size_t n) {
  DenseMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j <= i; ++j) m(i, j) = 1.0;
  return m;
}

DenseMatrix attention_mask(std::size_t n, bool causal) {
  return causal ? causal_mask(n) : DenseMatrix::ones(n, n);
}

DenseMatrix attention_logits(const DenseMatrix& x, const DenseMatrix& w_eff) {
  return matmul_transb(matmul(x, w_eff), x);
}

namespace {

DenseMatrix exp_checked(DenseMatrix logits) {
  const double peak = max_abs(logits);
  if (peak > kMaxRawScore) {
    throw NumericError("exp_scores: score magnitude " + std::to_string(peak) + " exceeds " +
                       std::to_string(kMaxRawScore));
  }
  for (double& v : logits.data()) v = std::exp(v);
  return logits;
}

}  // namespace

DenseMatrix exp_scores(const AttentionInstance& inst) {
  return exp_checked(attention_logits(inst.x(), inst.w()));
}

DenseMatrix exp_scores(const AttentionInstance& inst, const DenseMatrix& mask) {
  require_same_shape(mask, inst.w(), "exp_scores");
  return exp_checked(attention_logits(inst.x(), hadamard(mask, inst.w())));
}

SoftmaxMatrix masked_softmax(const DenseMatrix& scores, const DenseMatrix& m_c) {
  require_same_shape(scores, m_c, "masked_softmax");
  if (!scores.is_square()) throw ShapeError("masked_softmax: scores must be square");
  const std::size_t n = scores.rows();
  DenseMatrix probs(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    double total = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      probs(i, j) = scores(i, j) * m_c(i, j);
      total += probs(i, j);
    }
    if (!(total > 0.0) || !std::isfinite(total)) {
      throw DegenerateRowError(i, "masked_softmax: row " + std::to_string(i) +
                                      " has no unmasked mass");
    }
    for (std::size_t j = 0; j < n; ++j) probs(i, j) /= total;
  }
  return {std::move(probs)};
}

SoftmaxMatrix softmax_from_logits(const DenseMatrix& logits, bool causal) {
  if (!logits.is_square()) throw ShapeError("softmax_from_logits: logits must be square");
  const std::size_t n = logits.rows();
  DenseMatrix probs(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t end = causal ? i + 1 : n;
    const auto row = logits.row(i);
    const double peak = *std::max_element(row.begin(), row.begin() + static_cast<long>(end));
    double total = 0.0;
    for (std::size_t j = 0; j < end; ++j) {
      probs(i, j) = std::exp(row[j] - peak);
      total += probs(i, j);
    }
    for (std::size_t j = 0; j < end; ++j) probs(i, j) /= total;
  }
  return {std::move(probs)};
}

SoftmaxMatrix softmax_attention(const DenseMatrix& x, const DenseMatrix& w_eff, bool causal) {
  return softmax_from_logits(attention_logits(x, w_eff), causal);
}

SoftmaxMatrix attention_probs(const AttentionInstance& inst) {
  return softmax_attention(inst.x(), inst.w(), inst.use_causal_mask());
}

SoftmaxMatrix attention_probs(const AttentionInstance& inst, const DenseMatrix& mask) {
  require_same_shape(mask, inst.w(), "attention_probs");
  return softmax_attention(inst.x(), hadamard(mask, inst.w()), inst.use_causal_mask());
}

}  // namespace attnprune
