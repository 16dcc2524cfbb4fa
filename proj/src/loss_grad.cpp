#include "attnprune/loss_grad.hpp"

#include <string>

#include "attnprune/errors.hpp"
#include "attnprune/kernels.hpp"

namespace attnprune {
namespace {

double half_squared_distance(const DenseMatrix& a, const DenseMatrix& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double diff = a.data()[i] - b.data()[i];
    acc += diff * diff;
  }
  return 0.5 * acc;
}

void check_mask(const AttentionInstance& inst, const DenseMatrix& mask) {
  require_same_shape(mask, inst.w(), "pruning mask");
  if (!mask.all_finite()) throw NumericError("pruning mask has non-finite entries");
}

// p = c o f~ - diag((c o f~) 1) f~, built in place from c.
DenseMatrix softmax_backward(const DenseMatrix& c, const DenseMatrix& pruned) {
  const std::size_t n = c.rows();
  DenseMatrix p(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    double row_total = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      p(i, j) = c(i, j) * pruned(i, j);
      row_total += p(i, j);
    }
    for (std::size_t j = 0; j < n; ++j) p(i, j) -= row_total * pruned(i, j);
  }
  return p;
}

DenseMatrix xt_p_x(const DenseMatrix& x, const DenseMatrix& p) {
  return matmul(matmul(transpose(x), p), x);
}

DenseMatrix assemble(const DenseMatrix& w, const DenseMatrix& xtpx, const DenseMatrix& mask,
                     double lambda_tilde) {
  DenseMatrix grad = hadamard(w, xtpx);
  axpy(grad, lambda_tilde, mask);
  return grad;
}

}  // namespace

LossBreakdown loss(const AttentionInstance& inst, const SoftmaxMatrix& reference,
                   const DenseMatrix& mask, double lambda_tilde) {
  check_mask(inst, mask);
  const SoftmaxMatrix pruned = attention_probs(inst, mask);
  LossBreakdown out;
  out.attn = half_squared_distance(pruned.probs, reference.probs);
  out.reg = 0.5 * lambda_tilde * squared_frobenius_norm(mask);
  out.total = out.attn + out.reg;
  return out;
}

LossBreakdown loss(const AttentionInstance& inst, const DenseMatrix& mask, double lambda_tilde) {
  return loss(inst, attention_probs(inst), mask, lambda_tilde);
}

GradientParts gradient(const AttentionInstance& inst, const DenseMatrix& mask,
                       double lambda_tilde) {
  check_mask(inst, mask);
  const SoftmaxMatrix reference = attention_probs(inst);
  const SoftmaxMatrix pruned = attention_probs(inst, mask);
  const std::size_t n = inst.n();

  GradientParts parts;
  parts.c = subtract(pruned.probs, reference.probs);
  parts.p1 = hadamard(parts.c, pruned.probs);
  const auto sums = row_sums(parts.p1);
  parts.p2 = DenseMatrix(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) parts.p2(i, j) = sums[i] * pruned.probs(i, j);
  parts.p = subtract(parts.p1, parts.p2);
  parts.grad = assemble(inst.w(), xt_p_x(inst.x(), parts.p), mask, lambda_tilde);
  return parts;
}

DenseMatrix fd_gradient(const AttentionInstance& inst, const DenseMatrix& mask,
                        double lambda_tilde, double h) {
  if (!(h > 0.0)) throw ArgumentError("fd_gradient: step h must be positive");
  check_mask(inst, mask);
  const SoftmaxMatrix reference = attention_probs(inst);
  DenseMatrix out(mask.rows(), mask.cols());
  DenseMatrix probe = mask;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    const double base = mask.data()[i];
    probe.data()[i] = base + h;
    const double up = loss(inst, reference, probe, lambda_tilde).total;
    probe.data()[i] = base - h;
    const double down = loss(inst, reference, probe, lambda_tilde).total;
    probe.data()[i] = base;
    out.data()[i] = (up - down) / (2.0 * h);
  }
  return out;
}

SampleBackward sample_backward(const AttentionInstance& inst, const SoftmaxMatrix& reference,
                               const DenseMatrix& mask) {
  const SoftmaxMatrix pruned = attention_probs(inst, mask);
  const DenseMatrix c = subtract(pruned.probs, reference.probs);
  SampleBackward out;
  out.attn = half_squared_distance(pruned.probs, reference.probs);
  out.xtpx = xt_p_x(inst.x(), softmax_backward(c, pruned.probs));
  return out;
}

namespace {

BatchEvaluation reduce(const CalibrationSet& set, const std::vector<SampleBackward>& parts,
                       const DenseMatrix& mask, double lambda_tilde) {
  DenseMatrix total(set.d(), set.d());
  double attn = 0.0;
  for (const auto& part : parts) {
    axpy(total, 1.0, part.xtpx);
    attn += part.attn;
  }
  return {assemble(set.w(), total, mask, lambda_tilde), attn / static_cast<double>(set.k())};
}

}  // namespace

BatchEvaluation evaluate_batch(const CalibrationSet& set, const DenseMatrix& mask,
                               double lambda_tilde) {
  check_mask(set.instance(0), mask);
  std::vector<SampleBackward> parts(set.k());
  const auto k = static_cast<long>(set.k());
#pragma omp parallel for schedule(dynamic) num_threads(kernels::max_threads())
  for (long j = 0; j < k; ++j) {
    parts[j] = sample_backward(set.instances()[j], set.references()[j], mask);
  }
  return reduce(set, parts, mask, lambda_tilde);
}

BatchEvaluation evaluate_batch_serial(const CalibrationSet& set, const DenseMatrix& mask,
                                      double lambda_tilde) {
  check_mask(set.instance(0), mask);
  std::vector<SampleBackward> parts;
  parts.reserve(set.k());
  for (std::size_t j = 0; j < set.k(); ++j) {
    parts.push_back(sample_backward(set.instance(j), set.reference(j), mask));
  }
  return reduce(set, parts, mask, lambda_tilde);
}

DenseMatrix batch_gradient(const CalibrationSet& set, const DenseMatrix& mask,
                           double lambda_tilde) {
  return evaluate_batch(set, mask, lambda_tilde).bracket;
}

}  // namespace attnprune
