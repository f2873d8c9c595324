#include "banditbench/policies.hpp"

#include <stdexcept>
#include <string>

namespace banditbench {

namespace {

struct AlgorithmName {
  Algorithm algo;
  std::string_view name;
};

constexpr AlgorithmName kAlgorithmNames[] = {
    {Algorithm::neural_ts, "neural_ts"},     {Algorithm::neural_ucb, "neural_ucb"},
    {Algorithm::lin_ts, "lin_ts"},           {Algorithm::lin_ucb, "lin_ucb"},
    {Algorithm::kernel_ts, "kernel_ts"},     {Algorithm::kernel_ucb, "kernel_ucb"},
    {Algorithm::eps_greedy, "eps_greedy"},   {Algorithm::bootstrap_nn, "bootstrap_nn"},
    {Algorithm::uniform, "uniform"},
};

}  // namespace

Algorithm parse_algorithm(std::string_view text) {
  for (const auto& entry : kAlgorithmNames) {
    if (entry.name == text) return entry.algo;
  }
  throw std::invalid_argument("unknown algorithm '" + std::string(text) + "'");
}

std::string_view to_string(Algorithm algo) {
  for (const auto& entry : kAlgorithmNames) {
    if (entry.algo == algo) return entry.name;
  }
  return "unknown";
}

bool uses_network(Algorithm algo) {
  switch (algo) {
    case Algorithm::neural_ts:
    case Algorithm::neural_ucb:
    case Algorithm::eps_greedy:
    case Algorithm::bootstrap_nn:
      return true;
    default:
      return false;
  }
}

void PolicyConfig::validate() const {
  if (!(nu >= 0.0)) throw std::invalid_argument("PolicyConfig: nu must be >= 0");
  if (!(lambda > 0.0)) throw std::invalid_argument("PolicyConfig: lambda must be > 0");
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) {
    throw std::invalid_argument("PolicyConfig: epsilon must lie in [0, 1]");
  }
  if (bootstrap_networks < 1) {
    throw std::invalid_argument("PolicyConfig: bootstrap network count must be >= 1");
  }
  if (!(bootstrap_inclusion >= 0.0 && bootstrap_inclusion <= 1.0)) {
    throw std::invalid_argument("PolicyConfig: bootstrap inclusion must lie in [0, 1]");
  }
  if (!(kernel_gamma > 0.0)) throw std::invalid_argument("PolicyConfig: gamma must be > 0");
  if (stop_train < kTrainForever) {
    throw std::invalid_argument("PolicyConfig: stop_train must be >= 0 or -1 (never)");
  }
  if (uses_network(algorithm)) {
    nn::NetShape{2, width, depth}.validate();
    effective_train().validate(width);
  }
}

nn::TrainConfig PolicyConfig::effective_train() const {
  nn::TrainConfig t = train;
  t.lambda = lambda;
  return t;
}

std::size_t argmax_lowest(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("argmax over an empty set");
  std::size_t best = 0;
  for (std::size_t k = 1; k < values.size(); ++k) {
    if (values[k] > values[best]) best = k;
  }
  return best;
}

std::uint64_t network_seed(std::uint64_t seed, int index) {
  return mix_seed(mix_seed(seed, stream::kInit), static_cast<std::uint64_t>(index));
}

std::unique_ptr<Policy> make_policy(const PolicyConfig& cfg, int context_dim,
                                    std::uint64_t seed) {
  cfg.validate();
  switch (cfg.algorithm) {
    case Algorithm::neural_ts:
      return std::make_unique<NeuralPolicy>(cfg, context_dim, seed,
                                            NeuralPolicy::Exploration::sample);
    case Algorithm::neural_ucb:
      return std::make_unique<NeuralPolicy>(cfg, context_dim, seed,
                                            NeuralPolicy::Exploration::ucb);
    case Algorithm::lin_ts:
      return std::make_unique<LinearPolicy>(cfg, context_dim, LinearPolicy::Exploration::sample);
    case Algorithm::lin_ucb:
      return std::make_unique<LinearPolicy>(cfg, context_dim, LinearPolicy::Exploration::ucb);
    case Algorithm::kernel_ts:
      return std::make_unique<KernelPolicy>(cfg, KernelPolicy::Exploration::sample);
    case Algorithm::kernel_ucb:
      return std::make_unique<KernelPolicy>(cfg, KernelPolicy::Exploration::ucb);
    case Algorithm::eps_greedy:
      return std::make_unique<EpsilonGreedyPolicy>(cfg, context_dim, seed);
    case Algorithm::bootstrap_nn:
      return std::make_unique<BootstrapPolicy>(cfg, context_dim, seed);
    case Algorithm::uniform:
      return std::make_unique<UniformPolicy>();
  }
  throw std::invalid_argument("make_policy: unhandled algorithm");
}

Decision UniformPolicy::select(std::span<const Context> contexts, Rng& rng) const {
  if (contexts.empty()) throw std::invalid_argument("select: no arms");
  Decision d;
  d.scores.assign(contexts.size(), 0.0);
  d.means.assign(contexts.size(), 0.0);
  d.sigmas.assign(contexts.size(), 0.0);
  d.arm = uniform_index(rng, contexts.size());
  d.scores[d.arm] = 1.0;
  return d;
}

}  // namespace banditbench
