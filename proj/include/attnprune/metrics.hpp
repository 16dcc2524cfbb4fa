#pragma once

#include "attnprune/attention.hpp"

namespace attnprune {

/// ||f~ - f||_F^2 / ||f||_F^2 between pruned and reference probabilities.
double relative_error(const SoftmaxMatrix& reference, const SoftmaxMatrix& pruned);

/// Relative error of the attention built from `pruned_fused_w` against the
/// instance's own attention, under the instance's attention mask.
double relative_error(const AttentionInstance& inst, const DenseMatrix& pruned_fused_w);

}  // namespace attnprune
