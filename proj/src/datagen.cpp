#include "attnprune/datagen.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <string>

#include "attnprune/decomp.hpp"
#include "attnprune/errors.hpp"
#include "attnprune/kernels.hpp"
#include "attnprune/matrix_io.hpp"

namespace attnprune {
namespace {

constexpr double kMinInputSingularValue = 1e-9;
constexpr int kMaxRedraws = 16;

DenseMatrix full_rank_input(const SyntheticSpec& spec, std::size_t j) {
  const std::uint64_t base = mix_seed(spec.seed, streams::kInputBase + j);
  for (int attempt = 0; attempt < kMaxRedraws; ++attempt) {
    SplitMix64 rng(attempt == 0 ? base : mix_seed(base, static_cast<std::uint64_t>(attempt)));
    DenseMatrix x = gaussian_matrix(spec.n, spec.d, rng);
    if (singular_values(x).back() > kMinInputSingularValue) return x;
  }
  throw NumericError("generate: input " + std::to_string(j) + " stayed rank deficient after " +
                     std::to_string(kMaxRedraws) + " draws");
}

std::string input_name(std::size_t j) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "x_%03zu.atpm", j);
  return buf;
}

}  // namespace

void SyntheticSpec::validate() const {
  if (n == 0 || d == 0 || k == 0) throw ArgumentError("SyntheticSpec: n, d and k must be positive");
  if (weight_rank == 0 || weight_rank > d) {
    throw ArgumentError("SyntheticSpec: weight_rank must lie in [1, d]");
  }
}

DenseMatrix gaussian_matrix(std::size_t rows, std::size_t cols, SplitMix64& rng) {
  DenseMatrix out(rows, cols);
  for (double& v : out.data()) v = rng.normal();
  return out;
}

DenseMatrix truncate_rank(const DenseMatrix& square, std::size_t rank) {
  SvdResult f = svd(square);
  for (std::size_t i = rank; i < f.s.size(); ++i) f.s[i] = 0.0;
  // u * diag(s) * v^T
  DenseMatrix us = f.u;
  for (std::size_t i = 0; i < us.rows(); ++i)
    for (std::size_t j = 0; j < us.cols(); ++j) us(i, j) *= f.s[j];
  return matmul_transb(us, f.v);
}

FactoredWeights generate_weights(const SyntheticSpec& spec) {
  spec.validate();
  SplitMix64 q_rng(mix_seed(spec.seed, streams::kQuery));
  SplitMix64 k_rng(mix_seed(spec.seed, streams::kKey));
  FactoredWeights out;
  out.wq = truncate_rank(gaussian_matrix(spec.d, spec.d, q_rng), spec.weight_rank);
  out.wk = truncate_rank(gaussian_matrix(spec.d, spec.d, k_rng), spec.weight_rank);
  return out;
}

SyntheticData generate(const SyntheticSpec& spec) {
  FactoredWeights weights = generate_weights(spec);
  const DenseMatrix w = weights.fused();

  std::vector<DenseMatrix> inputs(spec.k);
  const auto k = static_cast<long>(spec.k);
#pragma omp parallel for schedule(dynamic) num_threads(kernels::max_threads())
  for (long j = 0; j < k; ++j) inputs[j] = full_rank_input(spec, static_cast<std::size_t>(j));

  std::vector<AttentionInstance> instances;
  instances.reserve(spec.k);
  for (auto& x : inputs) instances.emplace_back(std::move(x), w, spec.use_causal_mask);
  return {std::move(weights), CalibrationSet(std::move(instances))};
}

void save_dataset(const std::filesystem::path& dir, const SyntheticSpec& spec,
                  const SyntheticData& data) {
  std::filesystem::create_directories(dir);
  io::save_binary(dir / "wq.atpm", data.weights.wq);
  io::save_binary(dir / "wk.atpm", data.weights.wk);
  io::save_binary(dir / "w.atpm", data.set.w());
  for (std::size_t j = 0; j < data.set.k(); ++j) {
    io::save_binary(dir / input_name(j), data.set.instance(j).x());
  }
  std::ofstream manifest(dir / "manifest.txt");
  manifest << "n=" << spec.n << "\nd=" << spec.d << "\nk=" << spec.k
           << "\nweight_rank=" << spec.weight_rank << "\nseed=" << spec.seed
           << "\ncausal=" << (spec.use_causal_mask ? 1 : 0) << '\n';
}

SyntheticData load_dataset(const std::filesystem::path& dir) {
  std::ifstream manifest(dir / "manifest.txt");
  if (!manifest) throw std::runtime_error("load_dataset: missing manifest in " + dir.string());
  std::map<std::string, std::string> fields;
  std::string line;
  while (std::getline(manifest, line)) {
    const auto eq = line.find('=');
    if (eq != std::string::npos) fields[line.substr(0, eq)] = line.substr(eq + 1);
  }
  if (!fields.count("k") || !fields.count("causal")) {
    throw std::runtime_error("load_dataset: manifest lacks k or causal");
  }
  const auto k = static_cast<std::size_t>(std::stoull(fields["k"]));
  const bool causal = fields["causal"] == "1";

  FactoredWeights weights{io::load_binary(dir / "wq.atpm"), io::load_binary(dir / "wk.atpm")};
  const DenseMatrix w = io::load_binary(dir / "w.atpm");
  std::vector<AttentionInstance> instances;
  instances.reserve(k);
  for (std::size_t j = 0; j < k; ++j) {
    instances.emplace_back(io::load_binary(dir / input_name(j)), w, causal);
  }
  return {std::move(weights), CalibrationSet(std::move(instances))};
}

}  // namespace attnprune
