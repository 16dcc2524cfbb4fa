#pragma once

#include <cstdint>
#include <variant>
#include <vector>

#include "attnprune/calibration.hpp"
#include "attnprune/loss_grad.hpp"

namespace attnprune {

struct FixedStep {
  double eta = 0.0;
};

/// eta = c / lambda_ctrl.
struct InverseLambdaStep {
  double c = 0.1;
};

using StepRule = std::variant<FixedStep, InverseLambdaStep>;

/// Upper bound applied to the step size produced by InverseLambdaStep.
inline constexpr double kMaxStepSize = 1e4;

struct PruneConfig {
  double lambda_ctrl = 0.04;  // regularization control; lambda_tilde = n * lambda_ctrl
  double rho = 0.5;
  std::size_t epochs = 100;
  double momentum = 0.9;
  StepRule step_rule = InverseLambdaStep{};
  bool clamp_mask = false;
  std::uint64_t seed = 0;

  /// Throws ArgumentError on out-of-range fields.
  void validate() const;
};

/// Fully resolved descent parameters. prune_mask_gd() derives these from a
/// PruneConfig; callers holding lambda_tilde directly can use run_mask_gd().
struct DescentOptions {
  double lambda_tilde = 0.0;
  double eta = 0.0;
  std::size_t epochs = 100;
  double momentum = 0.0;
  double rho = 0.5;
  bool clamp_mask = false;
};

struct MaskResult {
  DenseMatrix real_mask;
  DenseMatrix binary_mask;
  std::vector<LossBreakdown> loss_trace;  // loss at the iterate entering each epoch
  std::vector<double> relative_errors;    // per sample, after binarization
  double lambda_tilde = 0.0;
  double eta = 0.0;
  bool eta_capped = false;

  friend bool operator==(const MaskResult&, const MaskResult&);
};

/// Step size and whether the kMaxStepSize cap was hit.
std::pair<double, bool> resolve_step(const PruneConfig& config);

/// Momentum gradient descent on the real-valued mask from M = ones:
///   v <- momentum * v + bracket(M);  M <- M - (eta / k) * v
/// followed by binarize(M, rho). Throws DivergenceError on a non-finite
/// iterate.
MaskResult run_mask_gd(const CalibrationSet& set, const DescentOptions& options);

MaskResult prune_mask_gd(const CalibrationSet& set, const PruneConfig& config);

/// Zeroes exactly floor(rho * size) entries, the smallest under
/// (value asc, flat index asc); every other entry becomes 1.
DenseMatrix binarize(const DenseMatrix& mask, double rho);

}  // namespace attnprune
