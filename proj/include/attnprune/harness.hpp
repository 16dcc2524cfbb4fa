#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "attnprune/baselines.hpp"
#include "attnprune/datagen.hpp"
#include "attnprune/optimizer.hpp"
#include "attnprune/verify.hpp"

namespace attnprune {

enum class Method { Ours, Wanda, SparseGpt, Random, Magnitude };
enum class SweepAxis { Lambda, N, Rho };

std::string to_string(Method m);
std::string to_string(SweepAxis a);
Method parse_method(const std::string& name);
SweepAxis parse_axis(const std::string& name);

/// Descent settings shared by every "ours" run of a sweep.
struct DescentSettings {
  double lambda_ctrl = 0.04;
  std::size_t epochs = 100;
  double momentum = 0.9;
  double step_c = 0.1;  // eta = step_c / lambda_ctrl
  bool clamp_mask = false;
};

struct SweepSpec {
  SweepAxis axis = SweepAxis::Rho;
  std::vector<double> values;
  // Fixed settings; the field named by `axis` is overridden per value.
  std::size_t d = 64;
  std::size_t n = 128;
  std::size_t k = 16;
  double rho = 0.5;
  DescentSettings descent;
  std::uint64_t seed = 0;
  std::vector<Method> methods{Method::Ours, Method::Wanda, Method::SparseGpt};
  std::size_t weight_rank = 4;
  bool use_causal_mask = true;
  double damp = kDefaultDamp;
  bool record_time = false;  // wall_ms stays 0 unless set, keeping CSVs reproducible

  void validate() const;
};

struct SweepRow {
  Method method = Method::Ours;
  SweepAxis axis = SweepAxis::Rho;
  double value = 0.0;
  double mean_rel_err = 0.0;
  double std_rel_err = 0.0;
  double wall_ms = 0.0;
  std::uint64_t seed = 0;
  std::string error;  // empty on success
};

/// Per-sample relative errors of one method on one dataset.
std::vector<double> method_errors(Method method, const SyntheticData& data, double rho,
                                  const DescentSettings& descent, std::uint64_t seed,
                                  double damp = kDefaultDamp);

/// One row per (axis value, method), in that order. Cells run in parallel.
std::vector<SweepRow> run_sweep(const SweepSpec& spec);

inline constexpr const char* kSweepCsvHeader =
    "method,axis,value,mean_rel_err,std_rel_err,wall_ms,seed,error";
void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);
/// One "<method>.dat" per method with columns: value mean std.
void write_gnuplot_dat(const std::filesystem::path& dir, const std::vector<SweepRow>& rows);

/// All theory checks over `trials` random conforming instances per family,
/// in a fixed order: basic_bounds, lipschitz, lower_bound_xbx, lower_bound_p,
/// pl_inequality.
std::vector<TheoryReport> run_verify_suite(std::uint64_t seed, std::size_t trials);
void write_verify_csv(std::ostream& out, const std::vector<TheoryReport>& reports);

struct GradcheckRow {
  std::size_t trial = 0;
  std::size_t n = 0;
  std::size_t d = 0;
  bool causal = false;
  double lambda_tilde = 0.0;
  double max_rel_err = 0.0;  // max_ij |g - fd| / max(1, |g|)
};

/// Closed-form gradient vs central differences on random instances with
/// n in [2, 8], d in [1, 6], both mask modes, lambda_tilde in {0, 0.1, 1}.
std::vector<GradcheckRow> run_gradcheck(std::uint64_t seed, std::size_t trials, double h = 1e-5);
void write_gradcheck_csv(std::ostream& out, const std::vector<GradcheckRow>& rows);

/// Shortest round-trip decimal rendering used by every CSV writer.
std::string format_number(double v);

}  // namespace attnprune
