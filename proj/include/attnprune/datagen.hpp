#pragma once

#include <cstdint>
#include <filesystem>

#include "attnprune/calibration.hpp"
#include "attnprune/rng.hpp"
#include "attnprune/weights.hpp"

namespace attnprune {

struct SyntheticSpec {
  std::size_t n = 128;
  std::size_t d = 64;
  std::size_t k = 16;
  std::size_t weight_rank = 4;
  std::uint64_t seed = 0;
  bool use_causal_mask = true;

  void validate() const;
};

struct SyntheticData {
  FactoredWeights weights;
  CalibrationSet set;
};

/// Sub-seed streams. Weights depend only on (seed, d, rank) so that changing
/// n keeps them fixed; input j uses its own stream, and for a fixed d the
/// rows of a shorter input are a prefix of a longer one.
namespace streams {
inline constexpr std::uint64_t kQuery = 1;
inline constexpr std::uint64_t kKey = 2;
inline constexpr std::uint64_t kInputBase = 1000;
}  // namespace streams

/// rows x cols matrix of independent N(0, 1) draws, row-major order.
DenseMatrix gaussian_matrix(std::size_t rows, std::size_t cols, SplitMix64& rng);

/// Hard SVD truncation: keeps the `rank` largest singular values, zeroes the rest.
DenseMatrix truncate_rank(const DenseMatrix& square, std::size_t rank);

/// Rank-limited Gaussian weights and full-rank Gaussian inputs.
SyntheticData generate(const SyntheticSpec& spec);

/// Only the weights (identical to generate(spec).weights).
FactoredWeights generate_weights(const SyntheticSpec& spec);

/// Writes wq/wk/w/x_### binaries plus a key=value manifest into `dir`.
void save_dataset(const std::filesystem::path& dir, const SyntheticSpec& spec,
                  const SyntheticData& data);
/// Reads a directory written by save_dataset.
SyntheticData load_dataset(const std::filesystem::path& dir);

}  // namespace attnprune
