#include "attnprune/harness.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <ostream>

#include "attnprune/baselines.hpp"
#include "attnprune/errors.hpp"
#include "attnprune/kernels.hpp"
#include "attnprune/loss_grad.hpp"
#include "attnprune/metrics.hpp"
#include "attnprune/rng.hpp"

namespace attnprune {

std::string to_string(Method m) {
  switch (m) {
    case Method::Ours: return "ours";
    case Method::Wanda: return "wanda";
    case Method::SparseGpt: return "sparsegpt";
    case Method::Random: return "random";
    case Method::Magnitude: return "magnitude";
  }
  return "unknown";
}

std::string to_string(SweepAxis a) {
  switch (a) {
    case SweepAxis::Lambda: return "lambda";
    case SweepAxis::N: return "n";
    case SweepAxis::Rho: return "rho";
  }
  return "unknown";
}

Method parse_method(const std::string& name) {
  for (Method m : {Method::Ours, Method::Wanda, Method::SparseGpt, Method::Random, Method::Magnitude}) {
    if (to_string(m) == name) return m;
  }
  throw ArgumentError("unknown method '" + name + "'");
}

SweepAxis parse_axis(const std::string& name) {
  for (SweepAxis a : {SweepAxis::Lambda, SweepAxis::N, SweepAxis::Rho}) {
    if (to_string(a) == name) return a;
  }
  throw ArgumentError("unknown sweep axis '" + name + "'");
}

std::string format_number(double v) {
  std::array<char, 64> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return {buf.data(), end};
}

void SweepSpec::validate() const {
  if (values.empty()) throw ArgumentError("sweep: no axis values given");
  if (!std::is_sorted(values.begin(), values.end())) {
    throw ArgumentError("sweep: axis values must be ascending");
  }
  if (methods.empty()) throw ArgumentError("sweep: no methods selected");
  for (double v : values) {
    if (axis == SweepAxis::Rho && !(v >= 0.0 && v <= 1.0)) throw ArgumentError("sweep: rho outside [0, 1]");
    if (axis == SweepAxis::Lambda && !(v > 0.0)) throw ArgumentError("sweep: lambda must be positive");
    if (axis == SweepAxis::N && !(v >= 1.0 && v == std::floor(v))) {
      throw ArgumentError("sweep: n values must be positive integers");
    }
  }
}

namespace {

constexpr std::uint64_t kRandomMaskStream = 77;

DescentOptions descent_options(const DescentSettings& s, std::size_t n, double rho) {
  PruneConfig config;
  config.lambda_ctrl = s.lambda_ctrl;
  config.rho = rho;
  config.epochs = s.epochs;
  config.momentum = s.momentum;
  config.step_rule = InverseLambdaStep{s.step_c};
  config.clamp_mask = s.clamp_mask;
  config.validate();
  DescentOptions o;
  o.lambda_tilde = static_cast<double>(n) * s.lambda_ctrl;
  o.eta = resolve_step(config).first;
  o.epochs = s.epochs;
  o.momentum = s.momentum;
  o.rho = rho;
  o.clamp_mask = s.clamp_mask;
  return o;
}

std::vector<double> fused_mask_errors(const CalibrationSet& set, const DenseMatrix& mask) {
  const DenseMatrix pruned = hadamard(mask, set.w());
  std::vector<double> out;
  out.reserve(set.k());
  for (std::size_t j = 0; j < set.k(); ++j) {
    const auto& inst = set.instance(j);
    out.push_back(relative_error(set.reference(j),
                                 softmax_attention(inst.x(), pruned, inst.use_causal_mask())));
  }
  return out;
}

std::vector<double> factored_errors(const SyntheticData& data, const DenseMatrix& wq,
                                    const DenseMatrix& wk) {
  std::vector<double> out;
  out.reserve(data.set.k());
  for (const auto& inst : data.set.instances()) {
    out.push_back(baseline_attention_error(inst, data.weights, wq, wk));
  }
  return out;
}

}  // namespace

std::vector<double> method_errors(Method method, const SyntheticData& data, double rho,
                                  const DescentSettings& descent, std::uint64_t seed,
                                  double damp) {
  const auto& set = data.set;
  const auto& fw = data.weights;
  switch (method) {
    case Method::Ours:
      return run_mask_gd(set, descent_options(descent, set.n(), rho)).relative_errors;
    case Method::Wanda:
      return factored_errors(data, hadamard(fw.wq, wanda_mask(fw.wq, set, rho)),
                             hadamard(fw.wk, wanda_mask(fw.wk, set, rho)));
    case Method::SparseGpt:
      return factored_errors(data, sparsegpt_prune(fw.wq, set, rho, damp).weight,
                             sparsegpt_prune(fw.wk, set, rho, damp).weight);
    case Method::Random:
      return fused_mask_errors(set, random_mask(set.d(), rho, mix_seed(seed, kRandomMaskStream)));
    case Method::Magnitude:
      return fused_mask_errors(set, magnitude_mask(set.w(), rho));
  }
  throw ArgumentError("unknown method");
}

std::vector<SweepRow> run_sweep(const SweepSpec& spec) {
  spec.validate();

  // Datasets: one per n value when sweeping n, otherwise a single one.
  std::map<std::size_t, SyntheticData> datasets;
  auto spec_for = [&](std::size_t n) {
    SyntheticSpec s;
    s.n = n;
    s.d = spec.d;
    s.k = spec.k;
    s.weight_rank = spec.weight_rank;
    s.seed = spec.seed;
    s.use_causal_mask = spec.use_causal_mask;
    return s;
  };
  if (spec.axis == SweepAxis::N) {
    for (double v : spec.values) {
      const auto n = static_cast<std::size_t>(v);
      if (!datasets.count(n)) datasets.emplace(n, generate(spec_for(n)));
    }
  } else {
    datasets.emplace(spec.n, generate(spec_for(spec.n)));
  }

  struct Cell {
    std::size_t value_index;
    Method method;
  };
  std::vector<Cell> cells;
  for (std::size_t v = 0; v < spec.values.size(); ++v)
    for (Method m : spec.methods) cells.push_back({v, m});

  std::vector<SweepRow> rows(cells.size());
  const auto count = static_cast<long>(cells.size());
#pragma omp parallel for schedule(dynamic) num_threads(kernels::max_threads())
  for (long c = 0; c < count; ++c) {
    const Cell& cell = cells[c];
    const double value = spec.values[cell.value_index];
    SweepRow& row = rows[c];
    row.method = cell.method;
    row.axis = spec.axis;
    row.value = value;
    row.seed = spec.seed;

    double rho = spec.rho;
    DescentSettings descent = spec.descent;
    std::size_t n = spec.n;
    switch (spec.axis) {
      case SweepAxis::Rho: rho = value; break;
      case SweepAxis::Lambda: descent.lambda_ctrl = value; break;
      case SweepAxis::N: n = static_cast<std::size_t>(value); break;
    }

    const auto start = std::chrono::steady_clock::now();
    try {
      const auto errors = method_errors(cell.method, datasets.at(n), rho, descent, spec.seed, spec.damp);
      double mean = 0.0;
      for (double e : errors) mean += e;
      mean /= static_cast<double>(errors.size());
      double var = 0.0;
      for (double e : errors) var += (e - mean) * (e - mean);
      row.mean_rel_err = mean;
      row.std_rel_err = std::sqrt(var / static_cast<double>(errors.size()));
    } catch (const std::exception& e) {
      row.mean_rel_err = std::numeric_limits<double>::quiet_NaN();
      row.std_rel_err = std::numeric_limits<double>::quiet_NaN();
      row.error = e.what();
    }
    if (spec.record_time) {
      row.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    }
  }
  return rows;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << kSweepCsvHeader << '\n';
  for (const auto& r : rows) {
    std::string error = r.error;
    std::replace(error.begin(), error.end(), ',', ';');
    std::replace(error.begin(), error.end(), '\n', ' ');
    out << to_string(r.method) << ',' << to_string(r.axis) << ',' << format_number(r.value) << ','
        << format_number(r.mean_rel_err) << ',' << format_number(r.std_rel_err) << ','
        << format_number(r.wall_ms) << ',' << r.seed << ',' << error << '\n';
  }
}

void write_gnuplot_dat(const std::filesystem::path& dir, const std::vector<SweepRow>& rows) {
  std::filesystem::create_directories(dir);
  std::map<std::string, std::vector<const SweepRow*>> by_method;
  for (const auto& r : rows) by_method[to_string(r.method)].push_back(&r);
  for (const auto& [name, list] : by_method) {
    std::ofstream out(dir / (name + ".dat"));
    out << "# " << to_string(list.front()->axis) << " mean_rel_err std_rel_err\n";
    for (const SweepRow* r : list) {
      if (!r->error.empty()) continue;
      out << format_number(r->value) << ' ' << format_number(r->mean_rel_err) << ' '
          << format_number(r->std_rel_err) << '\n';
    }
  }
}

namespace {

enum Family : std::uint64_t { kBasic = 1, kLipschitz, kXbx, kP, kPl, kGradcheck };

std::size_t uniform_size(SplitMix64& rng, std::size_t lo, std::size_t hi) {
  return lo + static_cast<std::size_t>(rng.below(hi - lo + 1));
}

DenseMatrix uniform_matrix(std::size_t r, std::size_t c, SplitMix64& rng, double lo = 0.0,
                           double hi = 1.0) {
  DenseMatrix m(r, c);
  for (double& v : m.data()) v = rng.uniform(lo, hi);
  return m;
}

DenseMatrix scaled_gaussian(std::size_t r, std::size_t c, SplitMix64& rng, double s) {
  DenseMatrix m = gaussian_matrix(r, c, rng);
  for (double& v : m.data()) v *= s;
  return m;
}

TheoryReport basic_trial(SplitMix64& rng, std::size_t trial) {
  const std::size_t n = uniform_size(rng, 1, 10);
  const std::size_t d = uniform_size(rng, 1, 6);
  DenseMatrix x = gaussian_matrix(n, d, rng);
  DenseMatrix w = gaussian_matrix(d, d, rng);
  const AttentionInstance inst(std::move(x), std::move(w), trial % 2 == 0);
  return check_basic_bounds(inst, uniform_matrix(d, d, rng));
}

TheoryReport lipschitz_trial(SplitMix64& rng, std::size_t trial) {
  const std::size_t n = uniform_size(rng, 1, 6);
  const std::size_t d = uniform_size(rng, 1, 4);
  DenseMatrix x = gaussian_matrix(n, d, rng);
  DenseMatrix w = gaussian_matrix(d, d, rng);
  const AttentionInstance inst(std::move(x), std::move(w), trial % 2 == 0);
  const DenseMatrix m1 = uniform_matrix(d, d, rng);
  const DenseMatrix m2 = uniform_matrix(d, d, rng);
  return check_lipschitz(inst, m1, m2, rng.uniform(0.0, 1.0));
}

TheoryReport xbx_trial(SplitMix64& rng) {
  const DenseMatrix x = gaussian_matrix(3, 5, rng);
  const DenseMatrix b = gaussian_matrix(3, 3, rng);
  return check_lower_bound_xbx(x, b);
}

TheoryReport p_trial(SplitMix64& rng) {
  const std::size_t n = uniform_size(rng, 2, 6);
  DenseMatrix b = gaussian_matrix(n, n, rng);
  for (std::size_t i = 0; i < n; ++i) {
    double mean = 0.0;
    for (double v : b.row(i)) mean += v;
    mean /= static_cast<double>(n);
    for (double& v : b.row(i)) v -= mean;
  }
  const DenseMatrix f = softmax_from_logits(gaussian_matrix(n, n, rng), false).probs;
  return check_lower_bound_p(b, f);
}

TheoryReport pl_trial(SplitMix64& rng, std::size_t trial) {
  DenseMatrix x = gaussian_matrix(3, 4, rng);
  DenseMatrix w = gaussian_matrix(4, 4, rng);
  const AttentionInstance inst(std::move(x), std::move(w), false);
  const DenseMatrix mask = uniform_matrix(4, 4, rng);
  const double lambda = trial % 4 == 0 ? 0.0 : rng.uniform(0.0, 1.0);
  return check_pl_inequality(inst, mask, lambda);
}

template <typename Trial>
TheoryReport run_family(const std::string& name, std::uint64_t seed, Family family,
                        std::size_t trials, Trial trial_fn) {
  std::vector<TheoryReport> parts(trials);
  const auto count = static_cast<long>(trials);
#pragma omp parallel for schedule(dynamic) num_threads(kernels::max_threads())
  for (long t = 0; t < count; ++t) {
    SplitMix64 rng(mix_seed(mix_seed(seed, family), static_cast<std::uint64_t>(t)));
    parts[t] = trial_fn(rng, static_cast<std::size_t>(t));
  }
  TheoryReport total;
  total.check_name = name;
  for (const auto& p : parts) total.merge(p);
  return total;
}

}  // namespace

std::vector<TheoryReport> run_verify_suite(std::uint64_t seed, std::size_t trials) {
  std::vector<TheoryReport> out;
  out.push_back(run_family("basic_bounds", seed, kBasic, trials, basic_trial));
  out.push_back(run_family("lipschitz", seed, kLipschitz, trials, lipschitz_trial));
  out.push_back(run_family("lower_bound_xbx", seed, kXbx, trials,
                           [](SplitMix64& rng, std::size_t) { return xbx_trial(rng); }));
  out.push_back(run_family("lower_bound_p", seed, kP, trials,
                           [](SplitMix64& rng, std::size_t) { return p_trial(rng); }));
  out.push_back(run_family("pl_inequality", seed, kPl, trials, pl_trial));
  return out;
}

void write_verify_csv(std::ostream& out, const std::vector<TheoryReport>& reports) {
  out << "check,instances,violations,worst_margin,metrics\n";
  for (const auto& r : reports) {
    out << r.check_name << ',' << r.instances_tested << ',' << r.violations << ','
        << format_number(r.worst_margin) << ',';
    bool first = true;
    for (const auto& [key, value] : r.metrics) {
      out << (first ? "" : ";") << key << '=' << format_number(value);
      first = false;
    }
    out << '\n';
  }
}

std::vector<GradcheckRow> run_gradcheck(std::uint64_t seed, std::size_t trials, double h) {
  static constexpr std::array<double, 3> kLambdas{0.0, 0.1, 1.0};
  std::vector<GradcheckRow> rows(trials);
  const auto count = static_cast<long>(trials);
#pragma omp parallel for schedule(dynamic) num_threads(kernels::max_threads())
  for (long t = 0; t < count; ++t) {
    SplitMix64 rng(mix_seed(mix_seed(seed, kGradcheck), static_cast<std::uint64_t>(t)));
    GradcheckRow& row = rows[t];
    row.trial = static_cast<std::size_t>(t);
    row.n = uniform_size(rng, 2, 8);
    row.d = uniform_size(rng, 1, 6);
    row.causal = t % 2 == 0;
    row.lambda_tilde = kLambdas[static_cast<std::size_t>(t) % kLambdas.size()];
    DenseMatrix x = gaussian_matrix(row.n, row.d, rng);
    DenseMatrix w = scaled_gaussian(row.d, row.d, rng, 1.0 / static_cast<double>(row.d));
    const AttentionInstance inst(std::move(x), std::move(w), row.causal);
    const DenseMatrix mask = uniform_matrix(row.d, row.d, rng);
    const DenseMatrix closed = gradient(inst, mask, row.lambda_tilde).grad;
    const DenseMatrix numeric = fd_gradient(inst, mask, row.lambda_tilde, h);
    for (std::size_t i = 0; i < closed.size(); ++i) {
      const double g = closed.data()[i];
      const double err = std::abs(g - numeric.data()[i]) / std::max(1.0, std::abs(g));
      row.max_rel_err = std::max(row.max_rel_err, err);
    }
  }
  return rows;
}

void write_gradcheck_csv(std::ostream& out, const std::vector<GradcheckRow>& rows) {
  out << "trial,n,d,causal,lambda_tilde,max_rel_err\n";
  for (const auto& r : rows) {
    out << r.trial << ',' << r.n << ',' << r.d << ',' << (r.causal ? 1 : 0) << ','
        << format_number(r.lambda_tilde) << ',' << format_number(r.max_rel_err) << '\n';
  }
}

}  // namespace attnprune
