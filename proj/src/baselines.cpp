#include "attnprune/baselines.hpp"

#include <cmath>
#include <numeric>

#include "attnprune/decomp.hpp"
#include "attnprune/errors.hpp"
#include "attnprune/metrics.hpp"
#include "attnprune/rng.hpp"

namespace attnprune {
namespace {

void require_square_weight(const DenseMatrix& w, const CalibrationSet& set, const char* op) {
  if (w.rows() != set.d() || w.cols() != set.d()) {
    throw ShapeError(std::string(op) + ": weight " + w.shape_string() + " does not match d=" +
                     std::to_string(set.d()));
  }
}

DenseMatrix mask_from_scores(const DenseMatrix& scores, double rho) {
  const std::size_t zeros = prune_count(rho, scores.size());
  DenseMatrix mask = DenseMatrix::ones(scores.rows(), scores.cols());
  for (std::size_t idx : smallest_indices(scores.data(), zeros)) mask.data()[idx] = 0.0;
  return mask;
}

}  // namespace

std::vector<double> input_feature_norms(const CalibrationSet& set) {
  std::vector<double> sq(set.d(), 0.0);
  for (const auto& inst : set.instances()) {
    const DenseMatrix& x = inst.x();
    for (std::size_t r = 0; r < x.rows(); ++r)
      for (std::size_t i = 0; i < x.cols(); ++i) sq[i] += x(r, i) * x(r, i);
  }
  for (double& v : sq) v = std::sqrt(v);
  return sq;
}

DenseMatrix wanda_scores(const DenseMatrix& w, const CalibrationSet& set) {
  require_square_weight(w, set, "wanda_scores");
  const auto norms = input_feature_norms(set);
  DenseMatrix scores(w.rows(), w.cols());
  for (std::size_t i = 0; i < w.rows(); ++i)
    for (std::size_t j = 0; j < w.cols(); ++j) scores(i, j) = std::abs(w(i, j)) * norms[i];
  return scores;
}

DenseMatrix wanda_mask(const DenseMatrix& w, const CalibrationSet& set, double rho) {
  return mask_from_scores(wanda_scores(w, set), rho);
}

DenseMatrix magnitude_mask(const DenseMatrix& w, double rho) {
  DenseMatrix scores = w;
  for (double& v : scores.data()) v = std::abs(v);
  return mask_from_scores(scores, rho);
}

DenseMatrix random_mask(std::size_t d, double rho, std::uint64_t seed) {
  const std::size_t total = d * d;
  const std::size_t zeros = prune_count(rho, total);
  std::vector<std::size_t> order(total);
  std::iota(order.begin(), order.end(), std::size_t{0});
  SplitMix64 rng(seed);
  for (std::size_t i = 0; i < zeros; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(total - i));
    std::swap(order[i], order[j]);
  }
  DenseMatrix mask = DenseMatrix::ones(d, d);
  for (std::size_t i = 0; i < zeros; ++i) mask.data()[order[i]] = 0.0;
  return mask;
}

DenseMatrix damped_hessian(const CalibrationSet& set, double damp) {
  if (!(damp >= 0.0)) throw ArgumentError("damped_hessian: damp must be non-negative");
  const DenseMatrix xs = set.stacked_inputs();
  DenseMatrix h = matmul(transpose(xs), xs);
  double mean_diag = 0.0;
  for (std::size_t i = 0; i < h.rows(); ++i) mean_diag += h(i, i);
  mean_diag /= static_cast<double>(h.rows());
  for (std::size_t i = 0; i < h.rows(); ++i) h(i, i) += damp * mean_diag;
  return h;
}

SparseGptResult sparsegpt_prune(const DenseMatrix& w, const CalibrationSet& set, double rho,
                                double damp) {
  require_square_weight(w, set, "sparsegpt_prune");
  const std::size_t d = w.rows();
  DenseMatrix hinv;
  try {
    hinv = inverse_spd(damped_hessian(set, damp));
  } catch (const NumericError& e) {
    throw NumericError(std::string("sparsegpt_prune: singular Hessian after damping: ") + e.what());
  }
  // hinv = u^T u with u upper triangular.
  const DenseMatrix u = transpose(cholesky_lower(hinv));

  DenseMatrix saliency(d, d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) saliency(i, j) = w(i, j) * w(i, j) / hinv(i, i);

  SparseGptResult out{w, mask_from_scores(saliency, rho)};
  DenseMatrix& pruned = out.weight;
  for (std::size_t col = 0; col < d; ++col) {
    for (std::size_t i = 0; i < d; ++i) {
      if (out.mask(i, col) != 0.0) continue;
      const double err = pruned(i, col) / u(i, i);
      for (std::size_t q = i + 1; q < d; ++q) pruned(q, col) -= err * u(i, q);
      pruned(i, col) = 0.0;
    }
  }
  return out;
}

double baseline_attention_error(const AttentionInstance& inst, const FactoredWeights& fw,
                                const DenseMatrix& mq_applied, const DenseMatrix& mk_applied) {
  require_same_shape(mq_applied, fw.wq, "baseline_attention_error");
  require_same_shape(mk_applied, fw.wk, "baseline_attention_error");
  return relative_error(inst, matmul_transb(mq_applied, mk_applied));
}

}  // namespace attnprune
