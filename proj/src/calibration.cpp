#include "attnprune/calibration.hpp"

#include <algorithm>

#include "attnprune/errors.hpp"
#include "attnprune/kernels.hpp"

namespace attnprune {

CalibrationSet::CalibrationSet(std::vector<AttentionInstance> instances)
    : instances_(std::move(instances)) {
  if (instances_.empty()) throw ArgumentError("CalibrationSet: at least one instance required");
  const auto& first = instances_.front();
  for (const auto& inst : instances_) {
    if (inst.n() != first.n() || inst.d() != first.d()) {
      throw ShapeError("CalibrationSet: instances disagree on shape");
    }
    if (inst.use_causal_mask() != first.use_causal_mask()) {
      throw ArgumentError("CalibrationSet: instances disagree on the attention mask mode");
    }
    if (!(inst.w() == first.w())) {
      throw ArgumentError("CalibrationSet: instances must share the fused weight W");
    }
  }
  refs_.resize(instances_.size());
  const auto k = static_cast<long>(instances_.size());
#pragma omp parallel for schedule(dynamic) num_threads(kernels::max_threads())
  for (long j = 0; j < k; ++j) refs_[j] = attention_probs(instances_[j]);
}

DenseMatrix CalibrationSet::stacked_inputs() const {
  DenseMatrix out(k() * n(), d());
  for (std::size_t j = 0; j < k(); ++j) {
    const auto src = instances_[j].x().data();
    std::copy(src.begin(), src.end(), out.data().begin() + static_cast<long>(j * n() * d()));
  }
  return out;
}

}  // namespace attnprune
