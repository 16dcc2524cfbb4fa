#include <cmath>

#include "attnprune/loss_grad.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace attnprune;
using testutil::random_matrix;

namespace {

// L(M) with every sum written out.
double scalar_loss(const AttentionInstance& inst, const DenseMatrix& mask, double lt) {
  const std::size_t d = inst.d();
  DenseMatrix wm(d, d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) wm(i, j) = mask(i, j) * inst.w()(i, j);
  const auto a = testutil::scalar_attention(inst.x(), inst.w(), inst.use_causal_mask());
  const auto b = testutil::scalar_attention(inst.x(), wm, inst.use_causal_mask());
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a.size(); ++j) s += (b[i][j] - a[i][j]) * (b[i][j] - a[i][j]);
  double r = 0.0;
  for (double v : mask.data()) r += v * v;
  return 0.5 * s + 0.5 * lt * r;
}

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace

TEST_SUITE("loss_grad") {

TEST_CASE("unpruned mask") {
  SplitMix64 g(41);
  const AttentionInstance inst(random_matrix(4, 3, g), random_matrix(3, 3, g), true);
  const auto l = loss(inst, DenseMatrix::ones(3, 3), 0.3);
  CHECK(l.attn == 0.0);
  CHECK(l.reg == doctest::Approx(0.5 * 0.3 * 9));
  CHECK(l.total == doctest::Approx(0.5 * 0.3 * 9));
  CHECK(loss(inst, DenseMatrix::ones(3, 3), 0.0).total == 0.0);
  const auto parts = gradient(inst, DenseMatrix::ones(3, 3), 0.3);
  CHECK(parts.c == DenseMatrix::zeros(4, 4));
  CHECK(parts.p == DenseMatrix::zeros(4, 4));
  CHECK(parts.grad == DenseMatrix(3, 3, 0.3));
  CHECK(gradient(inst, DenseMatrix::ones(3, 3), 0.0).grad == DenseMatrix::zeros(3, 3));
}

TEST_CASE("loss matches scalar oracle") {
  SplitMix64 g(42);
  for (int t = 0; t < 20; ++t) {
    const bool causal = t % 2 == 1;
    const AttentionInstance inst(random_matrix(3, 2, g), random_matrix(2, 2, g, -2, 2), causal);
    const DenseMatrix mask = t == 0 ? DenseMatrix(2, 2, 0.5) : random_matrix(2, 2, g, 0, 1);
    const double lt = g.uniform(0.0, 1.0);
    CHECK(std::abs(loss(inst, mask, lt).total - scalar_loss(inst, mask, lt)) <= 1e-12);
    const auto cached = loss(inst, attention_probs(inst), mask, lt);
    CHECK(cached.total == loss(inst, mask, lt).total);
  }
}

TEST_CASE("gradient matches central differences") {
  SplitMix64 g(43);
  for (int t = 0; t < 30; ++t) {
    const AttentionInstance inst(random_matrix(4, 3, g), random_matrix(3, 3, g), t % 2 == 0);
    const auto mask = random_matrix(3, 3, g, 0, 1);
    const double lt = t % 3 == 0 ? 0.0 : 0.7;
    const auto grad = gradient(inst, mask, lt).grad;
    const auto fd = fd_gradient(inst, mask, lt, 1e-5);
    CHECK(max_abs_diff(grad, fd) <= 1e-6 * (1.0 + max_abs(grad)));
  }
}

TEST_CASE("gradient intermediates") {
  SplitMix64 g(44);
  for (int t = 0; t < 20; ++t) {
    const std::size_t n = 2 + g.below(6), d = 1 + g.below(4);
    const AttentionInstance inst(random_matrix(n, d, g), random_matrix(d, d, g), t % 2 == 0);
    const auto parts = gradient(inst, random_matrix(d, d, g, 0, 1), 0.2);
    for (double s : row_sums(parts.p)) CHECK(std::abs(s) <= 1e-12);
    for (double s : row_sums(parts.c)) CHECK(std::abs(s) <= 1e-12);
    CHECK(max_abs_diff(subtract(parts.p1, parts.p2), parts.p) == 0.0);
  }
}

TEST_CASE("one-parameter hand derivative") {
  // n = 2, d = 1, all-ones attention: row i is a logistic in m * t_i with
  // t_i = w x_i (x_1 - x_0), so L = sum_i (s(m t_i) - s(t_i))^2 + lt m^2 / 2.
  const double x0 = 0.8, x1 = -0.6, w = 1.7, m = 0.35, lt = 0.25;
  const AttentionInstance inst(DenseMatrix{{x0}, {x1}}, DenseMatrix{{w}}, false);
  double expected = lt * m;
  for (double xi : {x0, x1}) {
    const double t = w * xi * (x1 - x0);
    const double s = sigmoid(m * t);
    expected += 2.0 * (s - sigmoid(t)) * s * (1.0 - s) * t;
  }
  const DenseMatrix mask{{m}};
  CHECK(std::abs(fd_gradient(inst, mask, lt)(0, 0) - expected) <= 1e-8);
  CHECK(std::abs(gradient(inst, mask, lt).grad(0, 0) - expected) <= 1e-12);
}

TEST_CASE("finite differences converge quadratically") {
  SplitMix64 g(45);
  const AttentionInstance inst(random_matrix(5, 3, g), random_matrix(3, 3, g), false);
  const auto mask = random_matrix(3, 3, g, 0, 1);
  const auto exact = gradient(inst, mask, 0.1).grad;
  const double e1 = max_abs_diff(fd_gradient(inst, mask, 0.1, 4e-2), exact);
  const double e2 = max_abs_diff(fd_gradient(inst, mask, 0.1, 2e-2), exact);
  CHECK(e1 / e2 > 3.5);
  CHECK(e1 / e2 < 4.5);
}

TEST_CASE("batch bracket") {
  SplitMix64 g(46);
  const auto w = random_matrix(3, 3, g);
  const auto mask = random_matrix(3, 3, g, 0, 1);
  const double lt = 0.4;

  const AttentionInstance one(random_matrix(4, 3, g), w, true);
  CHECK(max_abs_diff(batch_gradient(CalibrationSet({one}), mask, lt), gradient(one, mask, lt).grad) <=
        1e-15);

  const auto single = subtract(gradient(one, mask, lt).grad, scale(mask, lt));
  const CalibrationSet rep({one, one, one, one});
  CHECK(max_abs_diff(batch_gradient(rep, mask, lt), add(scale(single, 4.0), scale(mask, lt))) <= 1e-12);

  std::vector<AttentionInstance> insts;
  for (int j = 0; j < 3; ++j) insts.emplace_back(random_matrix(4, 3, g), w, true);
  const CalibrationSet set(insts);
  DenseMatrix oracle = scale(mask, lt);
  double attn = 0.0;
  for (const auto& inst : insts) {
    oracle = add(oracle, subtract(gradient(inst, mask, lt).grad, scale(mask, lt)));
    attn += loss(inst, mask, 0.0).attn;
  }
  const auto eval = evaluate_batch(set, mask, lt);
  CHECK(max_abs_diff(eval.bracket, oracle) <= 1e-12);
  CHECK(std::abs(eval.attn_mean - attn / 3.0) <= 1e-12);
  const auto serial = evaluate_batch_serial(set, mask, lt);
  CHECK(serial.bracket == eval.bracket);
  CHECK(serial.attn_mean == eval.attn_mean);
}

}
