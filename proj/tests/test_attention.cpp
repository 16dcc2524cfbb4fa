#include <cmath>

#include "attnprune/attention.hpp"
#include "attnprune/calibration.hpp"
#include "attnprune/errors.hpp"
#include "attnprune/metrics.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace attnprune;
using testutil::random_matrix;

TEST_SUITE("attention") {

TEST_CASE("causal masks") {
  CHECK(causal_mask(1) == DenseMatrix{{1}});
  CHECK(causal_mask(2) == DenseMatrix{{1, 0}, {1, 1}});
  const auto m3 = causal_mask(3);
  double s = 0.0;
  for (double v : m3.data()) s += v;
  CHECK(s == 6.0);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) CHECK(m3(i, j) == (j <= i ? 1.0 : 0.0));
  CHECK(attention_mask(3, false) == DenseMatrix::ones(3, 3));
}

TEST_CASE("instance validation") {
  CHECK_THROWS_AS(AttentionInstance(DenseMatrix(3, 2), DenseMatrix(3, 3), true), ShapeError);
  CHECK_NOTHROW(AttentionInstance(DenseMatrix(3, 2), DenseMatrix(2, 2), true));
}

TEST_CASE("exp_scores") {
  SplitMix64 g(31);
  const auto x = random_matrix(3, 2, g);
  CHECK(exp_scores(AttentionInstance(x, DenseMatrix::zeros(2, 2), false)) == DenseMatrix::ones(3, 3));
  const AttentionInstance inst(x, random_matrix(2, 2, g), false);
  CHECK(exp_scores(inst, DenseMatrix::ones(2, 2)) == exp_scores(inst));
  // Oracle: explicit x_i^T W x_j.
  const auto e = exp_scores(inst);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) {
      double s = 0.0;
      for (std::size_t p = 0; p < 2; ++p)
        for (std::size_t q = 0; q < 2; ++q) s += x(i, p) * inst.w()(p, q) * x(j, q);
      CHECK(std::abs(e(i, j) - std::exp(s)) <= 1e-12 * std::max(1.0, std::exp(s)));
    }
  const AttentionInstance hot(DenseMatrix{{30.0}}, DenseMatrix{{1.0}}, false);
  CHECK_THROWS_AS(exp_scores(hot), NumericError);
}

TEST_CASE("masked_softmax examples") {
  const auto s = masked_softmax(DenseMatrix::ones(2, 2), causal_mask(2));
  CHECK(s.probs == DenseMatrix{{1, 0}, {0.5, 0.5}});
  CHECK(masked_softmax(DenseMatrix{{42.0}}, causal_mask(1)).probs == DenseMatrix{{1}});
  SplitMix64 g(32);
  const auto scores = random_matrix(4, 4, g, 0.1, 5.0);
  const auto p = masked_softmax(scores, causal_mask(4)).probs;
  for (std::size_t i = 0; i < 4; ++i) {
    double z = 0.0;
    for (std::size_t j = 0; j <= i; ++j) z += scores(i, j);
    for (std::size_t j = 0; j < 4; ++j)
      CHECK(std::abs(p(i, j) - (j <= i ? scores(i, j) / z : 0.0)) <= 1e-12);
  }
  DenseMatrix holed = DenseMatrix::ones(2, 2);
  holed(1, 0) = holed(1, 1) = 0.0;
  try {
    masked_softmax(DenseMatrix::ones(2, 2), holed);
    FAIL("expected DegenerateRowError");
  } catch (const DegenerateRowError& e) {
    CHECK(e.row() == 1);
  }
}

TEST_CASE("attention probabilities are row-stochastic and shift invariant") {
  SplitMix64 g(33);
  for (int t = 0; t < 30; ++t) {
    const std::size_t n = 1 + g.below(8), d = 1 + g.below(5);
    const bool causal = t % 2 == 0;
    const auto x = random_matrix(n, d, g);
    const AttentionInstance inst(x, random_matrix(d, d, g, -2, 2), causal);
    const auto f = attention_probs(inst).probs;
    for (double s : row_sums(f)) CHECK(std::abs(s - 1.0) <= 1e-12);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        CHECK(f(i, j) >= 0.0);
        if (causal && j > i) CHECK(f(i, j) == 0.0);
      }
    // Adding a constant to every logit of a row leaves the softmax unchanged.
    auto logits = attention_logits(x, inst.w());
    const auto base = softmax_from_logits(logits, causal).probs;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) logits(i, j) += 3.0 * static_cast<double>(i) - 1.0;
    CHECK(max_abs_diff(softmax_from_logits(logits, causal).probs, base) <= 1e-12);
    // Oracle: scalar loops.
    const auto oracle = testutil::scalar_attention(x, inst.w(), causal);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) CHECK(std::abs(f(i, j) - oracle[i][j]) <= 1e-12);
  }
}

TEST_CASE("guarded softmax survives huge logits") {
  const auto p = softmax_from_logits(DenseMatrix{{1000.0, 0.0}, {-2000.0, -2001.0}}, false).probs;
  CHECK(p.all_finite());
  CHECK(p(0, 0) == doctest::Approx(1.0));
  CHECK(p(1, 0) == doctest::Approx(1.0 / (1.0 + std::exp(-1.0))));
}

TEST_CASE("relative error") {
  SplitMix64 g(34);
  const AttentionInstance inst(random_matrix(4, 3, g), random_matrix(3, 3, g), true);
  CHECK(relative_error(inst, inst.w()) == 0.0);
  const AttentionInstance single(random_matrix(1, 3, g), random_matrix(3, 3, g), false);
  CHECK(relative_error(single, DenseMatrix::zeros(3, 3)) == 0.0);
  for (bool causal : {false, true}) {
    const DenseMatrix x{{0.7, -1.1}, {0.3, 0.9}};
    const DenseMatrix w{{1.2, -0.4}, {0.8, 2.0}};
    const DenseMatrix half{{1.2, 0.0}, {0.0, 2.0}};
    const AttentionInstance hand(x, w, causal);
    CHECK(std::abs(relative_error(hand, half) - testutil::scalar_relative_error(x, w, half, causal)) <=
          1e-12);
  }
}

TEST_CASE("calibration set validation and caching") {
  SplitMix64 g(35);
  const auto w = random_matrix(3, 3, g);
  std::vector<AttentionInstance> insts;
  for (int j = 0; j < 3; ++j) insts.emplace_back(random_matrix(4, 3, g), w, true);
  const CalibrationSet set(insts);
  CHECK(set.k() == 3);
  for (std::size_t j = 0; j < 3; ++j) CHECK(set.reference(j).probs == attention_probs(set.instance(j)).probs);
  CHECK(set.stacked_inputs().rows() == 12);
  CHECK(set.stacked_inputs()(4, 1) == set.instance(1).x()(0, 1));
  CHECK_THROWS_AS(CalibrationSet{std::vector<AttentionInstance>{}}, ArgumentError);
  auto other = insts;
  other.emplace_back(random_matrix(4, 3, g), random_matrix(3, 3, g), true);
  CHECK_THROWS_AS(CalibrationSet{other}, ArgumentError);
  other = insts;
  other.emplace_back(random_matrix(5, 3, g), w, true);
  CHECK_THROWS_AS(CalibrationSet{other}, ShapeError);
  other = insts;
  other.emplace_back(random_matrix(4, 3, g), w, false);
  CHECK_THROWS_AS(CalibrationSet{other}, ArgumentError);
}

}
