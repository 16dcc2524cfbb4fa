#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "attnprune/decomp.hpp"
#include "attnprune/errors.hpp"
#include "attnprune/kernels.hpp"
#include "attnprune/matrix.hpp"
#include "attnprune/matrix_io.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace attnprune;
using testutil::random_matrix;

TEST_SUITE("matrix") {

TEST_CASE("construction rejects bad data") {
  CHECK_THROWS_AS(DenseMatrix(2, 2, std::vector<double>{1, 2, 3}), ShapeError);
  CHECK_THROWS_AS(DenseMatrix(1, 2, std::vector<double>{1, NAN}), NumericError);
  CHECK_THROWS_AS(DenseMatrix(1, 1, INFINITY), NumericError);
  CHECK_THROWS_AS((DenseMatrix{{1, 2}, {3}}), ShapeError);
}

TEST_CASE("matmul examples") {
  const DenseMatrix b{{1, 2}, {3, 4}};
  CHECK(matmul(DenseMatrix::identity(2), b) == b);
  CHECK(matmul(DenseMatrix{{1, 2}, {3, 4}}, DenseMatrix{{0}, {1}}) == DenseMatrix{{2}, {4}});
  CHECK_THROWS_AS(matmul(DenseMatrix(2, 3), DenseMatrix(2, 3)), ShapeError);
  try {
    matmul(DenseMatrix(2, 3), DenseMatrix(4, 5));
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("2x3") != std::string::npos);
    CHECK(msg.find("4x5") != std::string::npos);
  }
}

TEST_CASE("matmul matches triple loop") {
  SplitMix64 g(11);
  for (int t = 0; t < 20; ++t) {
    const auto a = random_matrix(5, 3, g);
    const auto b = random_matrix(3, 4, g);
    CHECK(max_abs_diff(matmul(a, b), testutil::naive_matmul(a, b)) <= 1e-12);
    CHECK(max_abs_diff(matmul_transb(a, transpose(b)), testutil::naive_matmul(a, b)) <= 1e-12);
  }
}

TEST_CASE("matmul is associative") {
  SplitMix64 g(12);
  for (int t = 0; t < 20; ++t) {
    const auto a = random_matrix(4, 5, g), b = random_matrix(5, 3, g), c = random_matrix(3, 6, g);
    CHECK(max_abs_diff(matmul(matmul(a, b), c), matmul(a, matmul(b, c))) <= 1e-12);
  }
}

TEST_CASE("hadamard examples and commutativity") {
  SplitMix64 g(13);
  const auto a = random_matrix(3, 4, g);
  CHECK(hadamard(a, DenseMatrix::ones(3, 4)) == a);
  CHECK(hadamard(a, DenseMatrix::zeros(3, 4)) == DenseMatrix::zeros(3, 4));
  CHECK(hadamard(DenseMatrix{{1, 2}, {3, 4}}, DenseMatrix{{2, 0}, {1, 3}}) ==
        DenseMatrix{{2, 0}, {3, 12}});
  for (int t = 0; t < 20; ++t) {
    const auto x = random_matrix(4, 4, g), y = random_matrix(4, 4, g);
    CHECK(hadamard(x, y) == hadamard(y, x));
  }
  CHECK_THROWS_AS(hadamard(DenseMatrix(2, 2), DenseMatrix(2, 3)), ShapeError);
}

TEST_CASE("frobenius norm") {
  CHECK(frobenius_norm(DenseMatrix::zeros(3, 3)) == 0.0);
  CHECK(frobenius_norm(DenseMatrix{{3, 4}}) == doctest::Approx(5.0).epsilon(1e-15));
  SplitMix64 g(14);
  for (int t = 0; t < 20; ++t) {
    const auto a = random_matrix(4, 4, g);
    double s = 0.0;
    for (std::size_t i = 0; i < 4; ++i)
      for (std::size_t j = 0; j < 4; ++j) s += a(i, j) * a(i, j);
    CHECK(std::abs(frobenius_norm(a) - std::sqrt(s)) <= 1e-12);
    CHECK(std::abs(frobenius_norm(a) - frobenius_norm(transpose(a))) <= 1e-12);
  }
}

TEST_CASE("elementwise helpers") {
  const DenseMatrix a{{1, -2}, {3, 0.5}};
  CHECK(max_abs(a) == 3.0);
  CHECK(min_abs(a) == 0.5);
  CHECK(row_sums(a) == std::vector<double>{-1.0, 3.5});
  CHECK(subtract(add(a, a), a) == a);
  DenseMatrix b = a;
  axpy(b, 2.0, a);
  CHECK(b == scale(a, 3.0));
}

TEST_CASE("svd small cases") {
  const double ds[] = {3.0, 1.0};
  auto r = svd(DenseMatrix::diag(ds));
  CHECK(r.s[0] == doctest::Approx(3.0).epsilon(1e-14));
  CHECK(r.s[1] == doctest::Approx(1.0).epsilon(1e-14));
  r = svd(DenseMatrix::identity(4));
  for (double s : r.s) CHECK(s == doctest::Approx(1.0).epsilon(1e-14));
  CHECK_THROWS_AS(svd(DenseMatrix(2, 3)), ShapeError);
}

TEST_CASE("svd reconstructs random matrices") {
  SplitMix64 g(15);
  for (int t = 0; t < 50; ++t) {
    const std::size_t d = 1 + g.below(16);
    const auto a = random_matrix(d, d, g, -3.0, 3.0);
    const auto r = svd(a);
    const auto back = matmul(matmul(r.u, DenseMatrix::diag(r.s)), transpose(r.v));
    CHECK(max_abs_diff(back, a) <= 1e-9);
    CHECK(max_abs_diff(matmul(transpose(r.u), r.u), DenseMatrix::identity(d)) <= 1e-9);
    CHECK(max_abs_diff(matmul(transpose(r.v), r.v), DenseMatrix::identity(d)) <= 1e-9);
    CHECK(std::is_sorted(r.s.rbegin(), r.s.rend()));
    CHECK(r.s.back() >= 0.0);
  }
}

TEST_CASE("svd of rank-deficient input keeps orthonormal factors") {
  SplitMix64 g(16);
  const auto a = random_matrix(6, 2, g);
  const auto low = matmul_transb(a, a);  // rank 2
  const auto r = svd(low);
  CHECK(r.s[2] <= 1e-12);
  CHECK(max_abs_diff(matmul(transpose(r.u), r.u), DenseMatrix::identity(6)) <= 1e-9);
  CHECK(max_abs_diff(matmul(matmul(r.u, DenseMatrix::diag(r.s)), transpose(r.v)), low) <= 1e-9);
}

TEST_CASE("singular values of rectangular matrices") {
  SplitMix64 g(17);
  const auto a = random_matrix(3, 5, g);
  const auto s = singular_values(a);
  REQUIRE(s.size() == 3);
  // Oracle: eigenvalues of a a^T via its own svd (square, symmetric PSD).
  const auto r = svd(matmul_transb(a, a));
  for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(s[i] * s[i] - r.s[i]) <= 1e-10);
  const auto st = singular_values(transpose(a));
  for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(s[i] - st[i]) <= 1e-12);
}

TEST_CASE("cholesky and spd inverse") {
  SplitMix64 g(18);
  const auto a = random_matrix(7, 5, g);
  DenseMatrix h = matmul(transpose(a), a);
  for (std::size_t i = 0; i < 5; ++i) h(i, i) += 0.1;
  const auto l = cholesky_lower(h);
  CHECK(max_abs_diff(matmul_transb(l, l), h) <= 1e-12);
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = i + 1; j < 5; ++j) CHECK(l(i, j) == 0.0);
  CHECK(max_abs_diff(matmul(inverse_spd(h), h), DenseMatrix::identity(5)) <= 1e-10);
  CHECK_THROWS_AS(cholesky_lower(DenseMatrix{{1, 2}, {2, 1}}), NumericError);
}

TEST_CASE("kth_largest") {
  const std::vector<double> v{5, 1, 3};
  CHECK(kth_largest(v, 1) == 5.0);
  CHECK(kth_largest(v, 3) == 1.0);
  CHECK_THROWS_AS(kth_largest(v, 0), ArgumentError);
  CHECK_THROWS_AS(kth_largest(v, 4), ArgumentError);
  SplitMix64 g(19);
  std::vector<double> vals(100);
  for (double& x : vals) x = std::floor(g.uniform(0.0, 20.0));  // plenty of ties
  auto sorted = vals;
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  for (std::size_t k = 1; k <= 100; ++k) CHECK(kth_largest(vals, k) == sorted[k - 1]);
}

TEST_CASE("smallest_indices breaks ties by index") {
  const std::vector<double> v{2, 1, 1, 0, 2};
  CHECK(smallest_indices(v, 3) == std::vector<std::size_t>{3, 1, 2});
  CHECK(smallest_indices(v, 0).empty());
  CHECK(prune_count(0.5, 9) == 4);
  CHECK(prune_count(1.0, 9) == 9);
  CHECK_THROWS_AS(prune_count(1.5, 9), ArgumentError);
  CHECK_THROWS_AS(prune_count(-0.1, 9), ArgumentError);
}

TEST_CASE("serial and parallel kernels agree bitwise") {
  SplitMix64 g(20);
  for (auto [m, k, n] : {std::array<std::size_t, 3>{1, 1, 1}, {7, 3, 5}, {64, 64, 64}, {130, 70, 90}}) {
    const auto a = random_matrix(m, k, g), b = random_matrix(k, n, g), bt = random_matrix(n, k, g);
    CHECK(kernels::matmul_serial(a, b) == kernels::matmul_parallel(a, b));
    CHECK(kernels::matmul_transb_serial(a, bt) == kernels::matmul_transb_parallel(a, bt));
    CHECK(matmul(a, b) == kernels::matmul_serial(a, b));
  }
}

TEST_CASE("io round trips") {
  SplitMix64 g(21);
  for (int t = 0; t < 30; ++t) {
    const auto a = random_matrix(1 + g.below(6), 1 + g.below(6), g, -1e6, 1e6);
    std::stringstream bin, csv;
    io::write_binary(bin, a);
    CHECK(io::read_binary(bin) == a);
    io::write_csv(csv, a);
    CHECK(io::read_csv(csv) == a);
  }
  std::stringstream bad("XXXX");
  CHECK_THROWS_AS(io::read_binary(bad), NumericError);
  std::stringstream ragged("1,2\n3\n");
  CHECK_THROWS_AS(io::read_csv(ragged), ShapeError);
}

}
