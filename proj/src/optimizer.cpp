#include "attnprune/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <string>

#include "attnprune/errors.hpp"
#include "attnprune/metrics.hpp"

namespace attnprune {

void PruneConfig::validate() const {
  if (!(lambda_ctrl >= 0.0) || !std::isfinite(lambda_ctrl)) {
    throw ArgumentError("lambda_ctrl must be a finite non-negative number");
  }
  if (!(rho >= 0.0 && rho <= 1.0)) throw ArgumentError("rho must lie in [0, 1]");
  if (epochs == 0) throw ArgumentError("epochs must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ArgumentError("momentum must lie in [0, 1)");
  if (const auto* rule = std::get_if<InverseLambdaStep>(&step_rule)) {
    if (!(lambda_ctrl > 0.0)) throw ArgumentError("inverse-lambda step rule needs lambda_ctrl > 0");
    if (!(rule->c > 0.0)) throw ArgumentError("inverse-lambda constant must be positive");
  } else if (!(std::get<FixedStep>(step_rule).eta > 0.0)) {
    throw ArgumentError("fixed step size must be positive");
  }
}

bool operator==(const MaskResult& a, const MaskResult& b) {
  if (a.loss_trace.size() != b.loss_trace.size()) return false;
  for (std::size_t t = 0; t < a.loss_trace.size(); ++t) {
    const auto& x = a.loss_trace[t];
    const auto& y = b.loss_trace[t];
    if (x.attn != y.attn || x.reg != y.reg || x.total != y.total) return false;
  }
  return a.real_mask == b.real_mask && a.binary_mask == b.binary_mask &&
         a.relative_errors == b.relative_errors && a.lambda_tilde == b.lambda_tilde &&
         a.eta == b.eta && a.eta_capped == b.eta_capped;
}

std::pair<double, bool> resolve_step(const PruneConfig& config) {
  if (const auto* fixed = std::get_if<FixedStep>(&config.step_rule)) return {fixed->eta, false};
  const double eta = std::get<InverseLambdaStep>(config.step_rule).c / config.lambda_ctrl;
  if (eta > kMaxStepSize) return {kMaxStepSize, true};
  return {eta, false};
}

DenseMatrix binarize(const DenseMatrix& mask, double rho) {
  const std::size_t zeros = prune_count(rho, mask.size());
  DenseMatrix out = DenseMatrix::ones(mask.rows(), mask.cols());
  for (std::size_t idx : smallest_indices(mask.data(), zeros)) out.data()[idx] = 0.0;
  return out;
}

MaskResult run_mask_gd(const CalibrationSet& set, const DescentOptions& options) {
  if (options.epochs == 0) throw ArgumentError("epochs must be positive");
  if (!(options.eta > 0.0)) throw ArgumentError("step size must be positive");
  prune_count(options.rho, 1);  // validates rho

  const std::size_t d = set.d();
  const double step = options.eta / static_cast<double>(set.k());
  DenseMatrix mask = DenseMatrix::ones(d, d);
  DenseMatrix velocity(d, d);

  MaskResult result;
  result.lambda_tilde = options.lambda_tilde;
  result.eta = options.eta;
  result.loss_trace.reserve(options.epochs);

  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    const BatchEvaluation eval = evaluate_batch(set, mask, options.lambda_tilde);
    LossBreakdown entry;
    entry.attn = eval.attn_mean;
    entry.reg = 0.5 * options.lambda_tilde * squared_frobenius_norm(mask);
    entry.total = entry.attn + entry.reg;
    result.loss_trace.push_back(entry);

    for (double& v : velocity.data()) v *= options.momentum;
    axpy(velocity, 1.0, eval.bracket);
    axpy(mask, -step, velocity);
    if (options.clamp_mask) {
      for (double& m : mask.data()) m = std::clamp(m, 0.0, 1.0);
    }
    if (!mask.all_finite()) {
      const double norm = frobenius_norm(mask);
      throw DivergenceError(epoch, norm,
                            "mask descent diverged at epoch " + std::to_string(epoch) +
                                " (||M||_F = " + std::to_string(norm) + ")");
    }
  }

  result.binary_mask = binarize(mask, options.rho);
  result.real_mask = std::move(mask);
  const DenseMatrix pruned_w = hadamard(result.binary_mask, set.w());
  result.relative_errors.reserve(set.k());
  for (std::size_t j = 0; j < set.k(); ++j) {
    const auto& inst = set.instance(j);
    result.relative_errors.push_back(relative_error(
        set.reference(j), softmax_attention(inst.x(), pruned_w, inst.use_causal_mask())));
  }
  return result;
}

MaskResult prune_mask_gd(const CalibrationSet& set, const PruneConfig& config) {
  config.validate();
  const auto [eta, capped] = resolve_step(config);
  if (capped) {
    std::clog << "attnprune: inverse-lambda step at lambda_ctrl=" << config.lambda_ctrl
              << " capped at " << kMaxStepSize << '\n';
  }
  DescentOptions options;
  options.lambda_tilde = static_cast<double>(set.n()) * config.lambda_ctrl;
  options.eta = eta;
  options.epochs = config.epochs;
  options.momentum = config.momentum;
  options.rho = config.rho;
  options.clamp_mask = config.clamp_mask;
  MaskResult result = run_mask_gd(set, options);
  result.eta_capped = capped;
  return result;
}

}  // namespace attnprune
