#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "attnprune/errors.hpp"
#include "attnprune/harness.hpp"
#include "doctest.h"

using namespace attnprune;

namespace {

SweepSpec small_spec() {
  SweepSpec s;
  s.d = 6;
  s.n = 8;
  s.k = 3;
  s.weight_rank = 2;
  s.descent.epochs = 10;
  s.seed = 4;
  return s;
}

std::string csv_of(const std::vector<SweepRow>& rows) {
  std::ostringstream os;
  write_sweep_csv(os, rows);
  return os.str();
}

}  // namespace

TEST_SUITE("harness") {

TEST_CASE("names round trip") {
  for (Method m : {Method::Ours, Method::Wanda, Method::SparseGpt, Method::Random, Method::Magnitude})
    CHECK(parse_method(to_string(m)) == m);
  for (SweepAxis a : {SweepAxis::Lambda, SweepAxis::N, SweepAxis::Rho}) CHECK(parse_axis(to_string(a)) == a);
  CHECK_THROWS_AS(parse_method("obs"), ArgumentError);
  CHECK_THROWS_AS(parse_axis("k"), ArgumentError);
}

TEST_CASE("ours at rho zero has no error") {
  auto s = small_spec();
  s.methods = {Method::Ours};
  s.values = {0.0};
  const auto rows = run_sweep(s);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].mean_rel_err == 0.0);
  CHECK(rows[0].std_rel_err == 0.0);
  CHECK(rows[0].error.empty());
}

TEST_CASE("sweep csv is byte-identical across runs") {
  auto s = small_spec();
  s.methods = {Method::Random};
  s.values = {0.25, 0.5};
  CHECK(csv_of(run_sweep(s)) == csv_of(run_sweep(s)));
  s.methods = {Method::Ours, Method::Wanda, Method::SparseGpt, Method::Random, Method::Magnitude};
  s.axis = SweepAxis::N;
  s.values = {4, 8};
  const auto a = csv_of(run_sweep(s));
  CHECK(a == csv_of(run_sweep(s)));
  CHECK(a.rfind(kSweepCsvHeader, 0) == 0);
  CHECK(std::count(a.begin(), a.end(), '\n') == 11);
}

TEST_CASE("rows follow value then method order") {
  auto s = small_spec();
  s.axis = SweepAxis::Lambda;
  s.values = {0.01, 0.1};
  s.methods = {Method::Ours, Method::Magnitude};
  const auto rows = run_sweep(s);
  REQUIRE(rows.size() == 4);
  CHECK(rows[0].value == 0.01);
  CHECK(rows[1].method == Method::Magnitude);
  CHECK(rows[2].value == 0.1);
  // Lambda does not enter the magnitude baseline.
  CHECK(rows[1].mean_rel_err == rows[3].mean_rel_err);
  for (const auto& r : rows) {
    CHECK(r.mean_rel_err >= 0.0);
    CHECK(r.wall_ms == 0.0);
  }
}

TEST_CASE("failing cell is recorded and the sweep continues") {
  auto s = small_spec();
  s.axis = SweepAxis::Lambda;
  s.values = {1e3, 1e4};  // eta*lambda_tilde/k is huge: the mask blows up
  s.descent.step_c = 1e7;
  s.descent.epochs = 100;
  s.methods = {Method::Ours, Method::Magnitude};
  const auto rows = run_sweep(s);
  CHECK_FALSE(rows[0].error.empty());
  CHECK(std::isnan(rows[0].mean_rel_err));
  CHECK(rows[1].error.empty());
  CHECK(csv_of(rows).find("diverged") != std::string::npos);
}

TEST_CASE("spec validation") {
  auto s = small_spec();
  s.values = {};
  CHECK_THROWS_AS(run_sweep(s), ArgumentError);
  s.values = {0.5, 0.2};
  CHECK_THROWS_AS(run_sweep(s), ArgumentError);
  s.values = {0.5, 1.2};
  CHECK_THROWS_AS(run_sweep(s), ArgumentError);
}

TEST_CASE("reparameterised lambda matches a direct call") {
  SyntheticSpec ds;
  ds.n = 8;
  ds.d = 5;
  ds.k = 2;
  ds.weight_rank = 2;
  const auto data = generate(ds);
  PruneConfig c;
  c.lambda_ctrl = 0.05;
  c.epochs = 20;
  c.rho = 0.4;
  const auto via_config = prune_mask_gd(data.set, c);
  DescentOptions o;
  o.lambda_tilde = 8 * 0.05;
  o.eta = 0.1 / 0.05;
  o.epochs = 20;
  o.momentum = 0.9;
  o.rho = 0.4;
  CHECK(run_mask_gd(data.set, o) == via_config);
  DescentSettings ds2;
  ds2.lambda_ctrl = 0.05;
  ds2.epochs = 20;
  CHECK(method_errors(Method::Ours, data, 0.4, ds2, 0) == via_config.relative_errors);
}

TEST_CASE("gnuplot data files") {
  auto s = small_spec();
  s.values = {0.2, 0.4};
  s.methods = {Method::Wanda, Method::Magnitude};
  const auto dir = std::filesystem::temp_directory_path() / "attnprune_test_dat";
  std::filesystem::remove_all(dir);
  write_gnuplot_dat(dir, run_sweep(s));
  std::ifstream in(dir / "wanda.dat");
  std::string line;
  int lines = 0;
  while (std::getline(in, line)) ++lines;
  CHECK(lines == 3);
  CHECK(std::filesystem::exists(dir / "magnitude.dat"));
  std::filesystem::remove_all(dir);
}

TEST_CASE("gradcheck") {
  const auto rows = run_gradcheck(1, 12);
  REQUIRE(rows.size() == 12);
  for (const auto& r : rows) {
    CHECK(r.max_rel_err <= 1e-5);
    CHECK(r.n >= 2);
    CHECK(r.n <= 8);
    CHECK(r.d >= 1);
    CHECK(r.d <= 6);
  }
  std::ostringstream a, b;
  write_gradcheck_csv(a, rows);
  write_gradcheck_csv(b, run_gradcheck(1, 12));
  CHECK(a.str() == b.str());
}

TEST_CASE("number formatting round trips") {
  for (double v : {0.0, 0.1, 1.0 / 3.0, 1e-300, 12345.678, -2.5}) CHECK(std::stod(format_number(v)) == v);
}

}
