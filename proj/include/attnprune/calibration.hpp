#pragma once

#include <vector>

#include "attnprune/attention.hpp"

namespace attnprune {

/// k attention instances sharing n, d, mask mode and the fused weight W,
/// together with their reference probabilities f_j computed once.
class CalibrationSet {
 public:
  explicit CalibrationSet(std::vector<AttentionInstance> instances);

  const std::vector<AttentionInstance>& instances() const noexcept { return instances_; }
  const AttentionInstance& instance(std::size_t j) const { return instances_.at(j); }
  const SoftmaxMatrix& reference(std::size_t j) const { return refs_.at(j); }
  const std::vector<SoftmaxMatrix>& references() const noexcept { return refs_; }

  const DenseMatrix& w() const noexcept { return instances_.front().w(); }
  std::size_t k() const noexcept { return instances_.size(); }
  std::size_t n() const noexcept { return instances_.front().n(); }
  std::size_t d() const noexcept { return instances_.front().d(); }
  bool use_causal_mask() const noexcept { return instances_.front().use_causal_mask(); }

  /// All inputs stacked row-wise into a (k*n) x d matrix.
  DenseMatrix stacked_inputs() const;

 private:
  std::vector<AttentionInstance> instances_;
  std::vector<SoftmaxMatrix> refs_;
};

}  // namespace attnprune
