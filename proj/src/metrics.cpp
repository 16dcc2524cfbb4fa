#include "attnprune/metrics.hpp"

namespace attnprune {

double relative_error(const SoftmaxMatrix& reference, const SoftmaxMatrix& pruned) {
  require_same_shape(reference.probs, pruned.probs, "relative_error");
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < reference.probs.size(); ++i) {
    const double r = reference.probs.data()[i];
    const double diff = pruned.probs.data()[i] - r;
    num += diff * diff;
    den += r * r;
  }
  // Rows sum to one, so den >= 1.
  return num / den;
}

double relative_error(const AttentionInstance& inst, const DenseMatrix& pruned_fused_w) {
  require_same_shape(pruned_fused_w, inst.w(), "relative_error");
  return relative_error(attention_probs(inst),
                        softmax_attention(inst.x(), pruned_fused_w, inst.use_causal_mask()));
}

}  // namespace attnprune
