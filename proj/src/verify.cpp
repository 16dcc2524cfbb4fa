#include "attnprune/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "attnprune/decomp.hpp"
#include "attnprune/errors.hpp"
#include "attnprune/loss_grad.hpp"

namespace attnprune {

void TheoryReport::merge(const TheoryReport& other) {
  if (check_name.empty()) check_name = other.check_name;
  if (instances_tested == 0) {
    worst_margin = other.worst_margin;
  } else if (other.instances_tested > 0) {
    worst_margin = std::min(worst_margin, other.worst_margin);
  }
  instances_tested += other.instances_tested;
  violations += other.violations;
  details.insert(details.end(), other.details.begin(), other.details.end());
  for (const auto& [key, value] : other.metrics) {
    auto it = metrics.find(key);
    if (it == metrics.end()) {
      metrics.emplace(key, value);
    } else if (key.rfind("min_", 0) == 0) {
      it->second = std::min(it->second, value);
    } else {
      it->second = std::max(it->second, value);
    }
  }
}

namespace {

// Collects margins of the individual inequalities inside one check.
class Inequalities {
 public:
  explicit Inequalities(std::string name) { report_.check_name = std::move(name); }

  void upper(const std::string& label, double lhs, double rhs) { record(label, lhs, rhs, rhs - lhs); }
  void lower(const std::string& label, double lhs, double rhs) { record(label, lhs, rhs, lhs - rhs); }

  TheoryReport finish() {
    report_.instances_tested = 1;
    report_.worst_margin = worst_;
    return std::move(report_);
  }
  TheoryReport& report() { return report_; }

 private:
  void record(const std::string& label, double lhs, double rhs, double margin) {
    worst_ = std::min(worst_, margin);
    if (margin < -kTheorySlack || !std::isfinite(margin)) {
      std::ostringstream os;
      os.precision(17);
      os << report_.check_name << '/' << label << ": lhs=" << lhs << " rhs=" << rhs;
      report_.details.push_back(os.str());
      report_.violations = 1;
    }
  }

  TheoryReport report_;
  double worst_ = std::numeric_limits<double>::infinity();
};

double min_entry(const DenseMatrix& a) { return *std::min_element(a.data().begin(), a.data().end()); }

}  // namespace

TheoryReport check_basic_bounds(const AttentionInstance& inst, const DenseMatrix& mask) {
  const double n = static_cast<double>(inst.n());
  const SoftmaxMatrix reference = attention_probs(inst);
  const SoftmaxMatrix pruned = attention_probs(inst, mask);
  const DenseMatrix c = subtract(pruned.probs, reference.probs);
  const DenseMatrix cf = hadamard(c, pruned.probs);
  double diag_sq = 0.0;
  for (double s : row_sums(cf)) diag_sq += s * s;

  Inequalities checks("basic_bounds");
  checks.upper("pruned_probs", frobenius_norm(pruned.probs), std::sqrt(n));
  checks.upper("c", frobenius_norm(c), 2.0 * std::sqrt(n));
  checks.upper("c_hadamard_pruned", frobenius_norm(cf), 2.0 * std::sqrt(n));
  checks.upper("diag_row_sums", std::sqrt(diag_sq), 2.0 * n);
  return checks.finish();
}

TheoryReport check_lipschitz(const AttentionInstance& inst, const DenseMatrix& m1,
                             const DenseMatrix& m2, double lambda_tilde) {
  const double lhs =
      frobenius_norm(subtract(gradient(inst, m1, lambda_tilde).grad, gradient(inst, m2, lambda_tilde).grad));
  const double radius = std::max({1.0, frobenius_norm(inst.x()), frobenius_norm(inst.w())});
  const double d = static_cast<double>(inst.d());
  const double n = static_cast<double>(inst.n());
  const double constant = lambda_tilde + 30.0 * d * std::pow(n, 3.5) * std::pow(radius, 6.0);
  const double rhs = constant * frobenius_norm(subtract(m1, m2));

  Inequalities checks("lipschitz");
  checks.upper("gradient_difference", lhs, rhs);
  checks.report().metrics["lipschitz_ratio"] = rhs > 0.0 ? lhs / rhs : 0.0;
  checks.report().metrics["lipschitz_constant"] = constant;
  return checks.finish();
}

TheoryReport check_lower_bound_xbx(const DenseMatrix& x, const DenseMatrix& b) {
  if (x.rows() > x.cols()) {
    throw PreconditionError("check_lower_bound_xbx: needs n <= d, got " + x.shape_string());
  }
  if (b.rows() != x.rows() || b.cols() != x.rows()) {
    throw ShapeError("check_lower_bound_xbx: B must be n x n, got " + b.shape_string());
  }
  const auto s = singular_values(x);
  if (s.back() <= 1e-12 * std::max(1.0, s.front())) {
    throw PreconditionError("check_lower_bound_xbx: X X^T is singular");
  }
  const double beta = s.back() * s.back();
  const double lhs = frobenius_norm(matmul(matmul(transpose(x), b), x));

  Inequalities checks("lower_bound_xbx");
  checks.lower("xtbx", lhs, beta * frobenius_norm(b));
  checks.report().metrics["min_beta"] = beta;
  return checks.finish();
}

TheoryReport check_lower_bound_p(const DenseMatrix& b, const DenseMatrix& f) {
  require_same_shape(b, f, "check_lower_bound_p");
  if (!b.is_square()) throw ShapeError("check_lower_bound_p: B must be square");
  for (double s : row_sums(b)) {
    if (std::abs(s) > 1e-12) throw ArgumentError("check_lower_bound_p: B rows must sum to zero");
  }
  for (double s : row_sums(f)) {
    if (std::abs(s - 1.0) > 1e-12) throw ArgumentError("check_lower_bound_p: F rows must sum to one");
  }
  const double delta = min_entry(f);
  if (!(delta > 0.0)) throw ArgumentError("check_lower_bound_p: F needs a positive minimum entry");

  const std::size_t n = b.rows();
  const DenseMatrix bf = hadamard(b, f);
  const auto sums = row_sums(bf);
  DenseMatrix q = bf;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) q(i, j) -= sums[i] * f(i, j);

  Inequalities checks("lower_bound_p");
  checks.lower("p_form", frobenius_norm(q), delta * frobenius_norm(b));
  checks.report().metrics["min_delta"] = delta;
  return checks.finish();
}

PlConstants pl_constants(const AttentionInstance& inst, const DenseMatrix& mask,
                         double lambda_tilde) {
  if (inst.use_causal_mask()) {
    throw PreconditionError("pl check: needs the all-ones attention mask (causal rows hold zeros)");
  }
  if (inst.n() > inst.d()) throw PreconditionError("pl check: needs n <= d so that X X^T > 0");
  const auto s = singular_values(inst.x());
  if (s.back() <= 1e-12 * std::max(1.0, s.front())) {
    throw PreconditionError("pl check: X X^T is singular");
  }
  PlConstants k;
  k.beta = s.back() * s.back();
  k.delta = min_entry(attention_probs(inst, mask).probs);
  if (k.delta < 1e-300) throw PreconditionError("pl check: attention minimum entry underflows");
  k.mu = 2.0 * min_abs(inst.w()) * k.beta * k.delta;
  if (!(k.mu > 0.0)) throw PreconditionError("pl check: mu is zero (W has a zero entry)");
  const double n = static_cast<double>(inst.n());
  const double d = static_cast<double>(inst.d());
  const double common = max_abs(inst.w()) * squared_frobenius_norm(inst.x()) * lambda_tilde * d / k.mu;
  k.xi = 12.0 * std::sqrt(n) * common;
  k.xi_main_form = 12.0 * std::pow(n, -1.5) * common;
  return k;
}

TheoryReport check_pl_inequality(const AttentionInstance& inst, const DenseMatrix& mask,
                                 double lambda_tilde) {
  const PlConstants k = pl_constants(inst, mask, lambda_tilde);
  const LossBreakdown l = loss(inst, mask, lambda_tilde);
  const double lhs = squared_frobenius_norm(gradient(inst, mask, lambda_tilde).grad);
  const double rhs = 0.5 * k.mu *
                     (2.0 * l.attn +
                      2.0 * lambda_tilde * lambda_tilde / k.mu * squared_frobenius_norm(mask) - k.xi);

  Inequalities checks("pl_inequality");
  checks.lower("gradient_dominance", lhs, rhs);
  auto& m = checks.report().metrics;
  m["min_mu"] = k.mu;
  m["xi"] = k.xi;
  m["xi_main_form"] = k.xi_main_form;
  return checks.finish();
}

}  // namespace attnprune
