#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "attnprune/datagen.hpp"
#include "attnprune/harness.hpp"
#include "attnprune/kernels.hpp"
#include "attnprune/matrix_io.hpp"
#include "attnprune/optimizer.hpp"

namespace fs = std::filesystem;
using namespace attnprune;

namespace {

struct DataFlags {
  std::size_t d = 64;
  std::size_t n = 128;
  std::size_t k = 16;
  std::size_t rank = 4;
  std::uint64_t seed = 0;
  bool no_causal = false;

  void add_to(CLI::App* app) {
    app->add_option("--d", d, "model width")->check(CLI::PositiveNumber);
    app->add_option("--n", n, "sequence length")->check(CLI::PositiveNumber);
    app->add_option("--k", k, "number of calibration samples")->check(CLI::PositiveNumber);
    app->add_option("--rank", rank, "rank of W_Q and W_K")->check(CLI::PositiveNumber);
    app->add_option("--seed", seed, "data seed");
    app->add_flag("--no-causal", no_causal, "use the all-ones attention mask");
  }
  SyntheticSpec spec() const {
    SyntheticSpec s;
    s.d = d;
    s.n = n;
    s.k = k;
    s.weight_rank = rank;
    s.seed = seed;
    s.use_causal_mask = !no_causal;
    s.validate();
    return s;
  }
};

// Applies key=value lines to options of `app` that were not given on the
// command line. Blank lines and lines starting with '#' are skipped.
void apply_config(CLI::App* app, const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path.string());
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": expected key=value");
    }
    auto trim = [](std::string s) {
      s.erase(0, s.find_first_not_of(" \t\r"));
      s.erase(s.find_last_not_of(" \t\r") + 1);
      return s;
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    CLI::Option* opt = nullptr;
    try {
      opt = app->get_option("--" + key);
    } catch (const CLI::OptionNotFound&) {
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
    if (opt->count() > 0) continue;  // command line wins
    if (opt->get_type_size() == 0) {
      if (value == "true" || value == "1") opt->add_result("true");
    } else {
      opt->add_result(value);
    }
    opt->run_callback();
  }
}

template <class F>
void with_output(const std::string& path, F&& write) {
  if (path.empty() || path == "-") {
    write(std::cout);
    return;
  }
  if (fs::path(path).has_parent_path()) fs::create_directories(fs::path(path).parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  write(out);
}

int cmd_gen(const DataFlags& flags, const std::string& out_dir, bool csv) {
  const SyntheticSpec spec = flags.spec();
  const SyntheticData data = generate(spec);
  save_dataset(out_dir, spec, data);
  if (csv) {
    io::save_csv(fs::path(out_dir) / "wq.csv", data.weights.wq);
    io::save_csv(fs::path(out_dir) / "wk.csv", data.weights.wk);
    io::save_csv(fs::path(out_dir) / "w.csv", data.set.w());
    for (std::size_t j = 0; j < data.set.k(); ++j) {
      char name[32];
      std::snprintf(name, sizeof name, "x_%03zu.csv", j);
      io::save_csv(fs::path(out_dir) / name, data.set.instance(j).x());
    }
  }
  std::cerr << "wrote " << spec.k << " samples (n=" << spec.n << ", d=" << spec.d << ") to " << out_dir << '\n';
  return 0;
}

struct PruneFlags {
  std::string data_dir;
  double lambda = 0.04;
  double rho = 0.5;
  std::size_t epochs = 100;
  double momentum = 0.9;
  double eta = 0.0;
  double step_c = 0.1;
  bool clamp = false;
  std::string out;
  std::string errors_out;
  std::string mask_out;
};

int cmd_prune(const DataFlags& dflags, const PruneFlags& p) {
  const SyntheticData data = p.data_dir.empty() ? generate(dflags.spec()) : load_dataset(p.data_dir);
  PruneConfig config;
  config.lambda_ctrl = p.lambda;
  config.rho = p.rho;
  config.epochs = p.epochs;
  config.momentum = p.momentum;
  config.clamp_mask = p.clamp;
  config.seed = dflags.seed;
  if (p.eta > 0.0) config.step_rule = FixedStep{p.eta};
  else config.step_rule = InverseLambdaStep{p.step_c};
  const MaskResult r = prune_mask_gd(data.set, config);

  with_output(p.out, [&](std::ostream& os) {
    os << "epoch,attn,reg,total\n";
    for (std::size_t t = 0; t < r.loss_trace.size(); ++t) {
      const auto& l = r.loss_trace[t];
      os << t << ',' << format_number(l.attn) << ',' << format_number(l.reg) << ','
         << format_number(l.total) << '\n';
    }
  });
  if (!p.errors_out.empty()) {
    with_output(p.errors_out, [&](std::ostream& os) {
      os << "sample,rel_err\n";
      for (std::size_t j = 0; j < r.relative_errors.size(); ++j)
        os << j << ',' << format_number(r.relative_errors[j]) << '\n';
    });
  }
  if (!p.mask_out.empty()) io::save_binary(p.mask_out, r.binary_mask);

  double mean = 0.0;
  for (double e : r.relative_errors) mean += e;
  mean /= static_cast<double>(r.relative_errors.size());
  std::cerr << "lambda_tilde=" << format_number(r.lambda_tilde) << " eta=" << format_number(r.eta)
            << (r.eta_capped ? " (capped)" : "") << " final_loss=" << format_number(r.loss_trace.back().total)
            << " mean_rel_err=" << format_number(mean) << '\n';
  return 0;
}

struct SweepFlags {
  std::string axis = "rho";
  std::vector<double> values;
  std::vector<std::string> methods{"ours", "wanda", "sparsegpt"};
  double damp = kDefaultDamp;
  double step_c = 0.1;
  bool clamp = false;
  bool record_time = false;
  std::string out;
  std::string dat_dir;
  std::string config;
};

int cmd_sweep(const DataFlags& dflags, const PruneFlags& p, const SweepFlags& s) {
  SweepSpec spec;
  spec.axis = parse_axis(s.axis);
  spec.values = s.values;
  spec.d = dflags.d;
  spec.n = dflags.n;
  spec.k = dflags.k;
  spec.weight_rank = dflags.rank;
  spec.seed = dflags.seed;
  spec.use_causal_mask = !dflags.no_causal;
  spec.rho = p.rho;
  spec.descent.lambda_ctrl = p.lambda;
  spec.descent.epochs = p.epochs;
  spec.descent.momentum = p.momentum;
  spec.descent.step_c = s.step_c;
  spec.descent.clamp_mask = s.clamp;
  spec.damp = s.damp;
  spec.record_time = s.record_time;
  spec.methods.clear();
  for (const auto& m : s.methods) spec.methods.push_back(parse_method(m));

  const auto rows = run_sweep(spec);
  with_output(s.out, [&](std::ostream& os) { write_sweep_csv(os, rows); });
  if (!s.dat_dir.empty()) write_gnuplot_dat(s.dat_dir, rows);
  const auto failed = std::count_if(rows.begin(), rows.end(), [](const SweepRow& r) { return !r.error.empty(); });
  if (failed > 0) std::cerr << failed << " of " << rows.size() << " cells failed; see the error column\n";
  return 0;
}

int cmd_verify(std::uint64_t seed, std::size_t trials, const std::string& out) {
  const auto reports = run_verify_suite(seed, trials);
  with_output(out, [&](std::ostream& os) { write_verify_csv(os, reports); });
  std::size_t violations = 0;
  for (const auto& r : reports) {
    violations += r.violations;
    for (const auto& d : r.details) std::cerr << "violation: " << d << '\n';
  }
  std::cerr << "pl_inequality and lower_bound_xbx run on n <= d instances with the all-ones "
               "attention mask only\n";
  std::cerr << violations << " violation(s)\n";
  return violations == 0 ? 0 : 1;
}

int cmd_gradcheck(std::uint64_t seed, std::size_t trials, double h, double tol, const std::string& out) {
  const auto rows = run_gradcheck(seed, trials, h);
  with_output(out, [&](std::ostream& os) { write_gradcheck_csv(os, rows); });
  double worst = 0.0;
  for (const auto& r : rows) worst = std::max(worst, r.max_rel_err);
  std::cerr << "max relative error " << format_number(worst) << " over " << rows.size() << " instances\n";
  return worst <= tol ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Attention weight pruning by mask descent, with baselines and theory checks"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "worker threads (overrides ATTNPRUNE_THREADS)")
      ->check(CLI::NonNegativeNumber);

  DataFlags dflags;
  PruneFlags pflags;
  SweepFlags sflags;

  auto* gen = app.add_subcommand("gen", "generate a synthetic dataset");
  dflags.add_to(gen);
  std::string gen_out;
  bool gen_csv = false;
  gen->add_option("--out", gen_out, "output directory")->required();
  gen->add_flag("--csv", gen_csv, "also write every matrix as CSV");

  auto add_descent = [&](CLI::App* cmd) {
    cmd->add_option("--lambda", pflags.lambda, "regularization control; lambda_tilde = n * lambda")
        ->check(CLI::NonNegativeNumber);
    cmd->add_option("--rho", pflags.rho, "pruning ratio")->check(CLI::Range(0.0, 1.0));
    cmd->add_option("--epochs", pflags.epochs, "descent epochs")->check(CLI::PositiveNumber);
    cmd->add_option("--momentum", pflags.momentum, "heavy-ball momentum")->check(CLI::Range(0.0, 0.999999));
  };

  auto* prune = app.add_subcommand("prune", "run mask descent once");
  dflags.add_to(prune);
  add_descent(prune);
  prune->add_option("--data", pflags.data_dir, "dataset directory written by gen");
  prune->add_option("--eta", pflags.eta, "fixed step size (default: step-c / lambda)");
  prune->add_option("--step-c", pflags.step_c, "constant c in eta = c / lambda");
  prune->add_flag("--clamp", pflags.clamp, "clamp the mask to [0, 1] after each step");
  prune->add_option("--out", pflags.out, "loss trace CSV (default stdout)");
  prune->add_option("--errors-out", pflags.errors_out, "per-sample relative error CSV");
  prune->add_option("--mask-out", pflags.mask_out, "binary mask file");

  auto* sweep = app.add_subcommand("sweep", "sweep lambda, n or rho over several methods");
  dflags.add_to(sweep);
  add_descent(sweep);
  sweep->add_option("--axis", sflags.axis, "lambda, n or rho")
      ->check(CLI::IsMember({"lambda", "n", "rho"}));
  sweep->add_option("--values", sflags.values, "ascending axis values")->delimiter(',');
  sweep->add_option("--methods", sflags.methods, "ours,wanda,sparsegpt,random,magnitude")->delimiter(',');
  sweep->add_option("--damp", sflags.damp, "SparseGPT dampening")->check(CLI::NonNegativeNumber);
  sweep->add_option("--step-c", sflags.step_c, "constant c in eta = c / lambda");
  sweep->add_flag("--clamp", sflags.clamp, "clamp the mask to [0, 1] after each step");
  sweep->add_flag("--record-time", sflags.record_time, "fill wall_ms (makes output run-dependent)");
  sweep->add_option("--out", sflags.out, "CSV path (default stdout)");
  sweep->add_option("--dat-dir", sflags.dat_dir, "also write <method>.dat files here");
  sweep->add_option("--config", sflags.config, "key=value file; command-line flags take precedence");

  std::uint64_t vseed = 0;
  std::size_t vtrials = 100;
  std::string vout;
  auto* verify = app.add_subcommand("verify", "run the analytical inequality checks");
  verify->add_option("--seed", vseed);
  verify->add_option("--trials", vtrials, "instances per check family");
  verify->add_option("--out", vout, "CSV path (default stdout)");

  std::uint64_t gseed = 0;
  std::size_t gtrials = 50;
  double gh = 1e-5;
  double gtol = 1e-5;
  std::string gout;
  auto* gradcheck = app.add_subcommand("gradcheck", "closed-form gradient vs central differences");
  gradcheck->set_help_flag("--help", "print this help and exit");  // --h is the step size
  gradcheck->add_option("--seed", gseed);
  gradcheck->add_option("--trials", gtrials);
  gradcheck->add_option("--h", gh, "finite-difference step")->check(CLI::PositiveNumber);
  gradcheck->add_option("--tol", gtol, "exit nonzero above this error");
  gradcheck->add_option("--out", gout, "CSV path (default stdout)");

  CLI11_PARSE(app, argc, argv);
  if (threads > 0) kernels::set_max_threads(threads);

  try {
    if (*gen) return cmd_gen(dflags, gen_out, gen_csv);
    if (*prune) return cmd_prune(dflags, pflags);
    if (*sweep) {
      if (!sflags.config.empty()) apply_config(sweep, sflags.config);
      if (sflags.values.empty()) throw std::runtime_error("sweep: --values is required");
      return cmd_sweep(dflags, pflags, sflags);
    }
    if (*verify) return cmd_verify(vseed, vtrials, vout);
    if (*gradcheck) return cmd_gradcheck(gseed, gtrials, gh, gtol, gout);
  } catch (const std::exception& e) {
    std::cerr << "attnprune: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
