#include <benchmark/benchmark.h>

#include "attnprune/datagen.hpp"
#include "attnprune/kernels.hpp"
#include "attnprune/loss_grad.hpp"

using namespace attnprune;

namespace {

DenseMatrix random_square(std::size_t d, std::uint64_t seed) {
  SplitMix64 g(seed);
  return gaussian_matrix(d, d, g);
}

void BM_MatmulSerial(benchmark::State& state) {
  const auto d = static_cast<std::size_t>(state.range(0));
  const auto a = random_square(d, 1), b = random_square(d, 2);
  for (auto _ : state) benchmark::DoNotOptimize(kernels::matmul_serial(a, b));
  state.SetComplexityN(state.range(0));
}

void BM_MatmulParallel(benchmark::State& state) {
  const auto d = static_cast<std::size_t>(state.range(0));
  const auto a = random_square(d, 1), b = random_square(d, 2);
  for (auto _ : state) benchmark::DoNotOptimize(kernels::matmul_parallel(a, b));
  state.SetComplexityN(state.range(0));
}

const SyntheticData& dataset() {
  static const SyntheticData data = [] {
    SyntheticSpec s;
    s.n = 128;
    s.d = 64;
    s.k = 16;
    return generate(s);
  }();
  return data;
}

void BM_BatchSerial(benchmark::State& state) {
  const auto& set = dataset().set;
  const DenseMatrix mask(set.d(), set.d(), 0.7);
  for (auto _ : state) benchmark::DoNotOptimize(evaluate_batch_serial(set, mask, 5.12));
}

void BM_BatchParallel(benchmark::State& state) {
  const auto& set = dataset().set;
  const DenseMatrix mask(set.d(), set.d(), 0.7);
  for (auto _ : state) benchmark::DoNotOptimize(evaluate_batch(set, mask, 5.12));
}

}  // namespace

BENCHMARK(BM_MatmulSerial)->RangeMultiplier(2)->Range(32, 256)->Complexity();
BENCHMARK(BM_MatmulParallel)->RangeMultiplier(2)->Range(32, 256)->Complexity();
BENCHMARK(BM_BatchSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BatchParallel)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
