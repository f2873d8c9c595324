#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include "banditbench/nn.hpp"
#include "banditbench/posterior.hpp"
#include "banditbench/rng.hpp"

namespace banditbench {

using Context = Eigen::VectorXd;

enum class Algorithm {
  neural_ts,
  neural_ucb,
  lin_ts,
  lin_ucb,
  kernel_ts,
  kernel_ucb,
  eps_greedy,
  bootstrap_nn,
  uniform,
};

Algorithm parse_algorithm(std::string_view text);
std::string_view to_string(Algorithm algo);
bool uses_network(Algorithm algo);

/// Round limit meaning "never stop training".
inline constexpr long kTrainForever = -1;

struct PolicyConfig {
  Algorithm algorithm = Algorithm::neural_ts;
  // Exploration scale: TS standard-deviation multiplier, or UCB width.
  double nu = 0.1;
  double lambda = 1.0;
  int width = 100;
  int depth = 2;
  nn::TrainConfig train;
  PosteriorMode posterior = PosteriorMode::diagonal;
  // Training (and kernel growth) happens only while the observation count is
  // at most stop_train.
  long stop_train = 1000;
  bool warm_start = true;
  double epsilon = 0.05;
  int bootstrap_networks = 10;
  double bootstrap_inclusion = 0.8;
  double kernel_gamma = 1.0;

  /// Throws std::invalid_argument for out-of-range fields.
  void validate() const;
  /// train config with lambda taken from this config.
  nn::TrainConfig effective_train() const;
};

struct Decision {
  std::size_t arm = 0;
  std::vector<double> scores;
  std::vector<double> means;
  std::vector<double> sigmas;
};

/// Index of the largest value; ties go to the lowest index.
std::size_t argmax_lowest(std::span<const double> values);

/// Common interface of every bandit algorithm.
///
/// select() is const: it reads the model and draws only from the caller's
/// engine. observe() updates the model and uses the policy's own engines.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual Decision select(std::span<const Context> contexts, Rng& rng) const = 0;
  virtual void observe(const Context& context, double reward) = 0;
  virtual std::string_view name() const = 0;
  /// Number of observe() calls so far.
  virtual std::size_t observations() const = 0;
};

std::unique_ptr<Policy> make_policy(const PolicyConfig& cfg, int context_dim,
                                    std::uint64_t seed);

/// Seed of network `index` in a policy seeded with `seed`. Every neural
/// policy uses index 0 for its (first) network.
std::uint64_t network_seed(std::uint64_t seed, int index);

/// A network fitted to its own history by repeated warm-started training.
class NeuralRegressor {
 public:
  NeuralRegressor(const nn::NetShape& shape, const nn::TrainConfig& train, bool warm_start,
                  std::uint64_t seed);

  double predict(const Context& x) const { return nn::forward(theta_, x); }
  void append(const Context& x, double reward);
  /// Re-solves the regularized loss on the current history.
  void fit();

  const nn::Params& theta() const { return theta_; }
  const nn::Params& anchor() const { return anchor_; }
  const std::vector<nn::Sample>& history() const { return history_; }

 private:
  nn::TrainConfig train_;
  bool warm_start_;
  nn::Params anchor_;
  nn::Params theta_;
  std::vector<nn::Sample> history_;
  Rng rng_;
};

/// NeuralTS (sampled scores) and NeuralUCB (mean + nu * sigma).
class NeuralPolicy final : public Policy {
 public:
  enum class Exploration { sample, ucb };

  NeuralPolicy(const PolicyConfig& cfg, int context_dim, std::uint64_t seed,
               Exploration exploration);

  Decision select(std::span<const Context> contexts, Rng& rng) const override;
  void observe(const Context& context, double reward) override;
  std::string_view name() const override;
  std::size_t observations() const override { return rounds_; }

  const NeuralRegressor& model() const { return model_; }
  const DesignMatrix& design() const { return design_; }

 private:
  PolicyConfig cfg_;
  Exploration exploration_;
  NeuralRegressor model_;
  DesignMatrix design_;
  std::size_t rounds_ = 0;
};

class EpsilonGreedyPolicy final : public Policy {
 public:
  EpsilonGreedyPolicy(const PolicyConfig& cfg, int context_dim, std::uint64_t seed);

  Decision select(std::span<const Context> contexts, Rng& rng) const override;
  void observe(const Context& context, double reward) override;
  std::string_view name() const override { return "eps_greedy"; }
  std::size_t observations() const override { return rounds_; }

  const NeuralRegressor& model() const { return model_; }

 private:
  PolicyConfig cfg_;
  NeuralRegressor model_;
  std::size_t rounds_ = 0;
};

/// Ensemble of independently initialized networks; each observation joins
/// each network's training set with probability `bootstrap_inclusion`.
class BootstrapPolicy final : public Policy {
 public:
  BootstrapPolicy(const PolicyConfig& cfg, int context_dim, std::uint64_t seed);

  Decision select(std::span<const Context> contexts, Rng& rng) const override;
  void observe(const Context& context, double reward) override;
  std::string_view name() const override { return "bootstrap_nn"; }
  std::size_t observations() const override { return rounds_; }

  std::size_t inclusions() const { return inclusions_; }
  const std::vector<NeuralRegressor>& models() const { return models_; }

 private:
  PolicyConfig cfg_;
  std::vector<NeuralRegressor> models_;
  Rng inclusion_rng_;
  std::size_t rounds_ = 0;
  std::size_t inclusions_ = 0;
};

/// LinTS / LinUCB on the ridge posterior A = lambda I + sum x x^T,
/// mu = A^{-1} sum r x.
class LinearPolicy final : public Policy {
 public:
  enum class Exploration { sample, ucb };

  LinearPolicy(const PolicyConfig& cfg, int context_dim, Exploration exploration);

  Decision select(std::span<const Context> contexts, Rng& rng) const override;
  void observe(const Context& context, double reward) override;
  std::string_view name() const override;
  std::size_t observations() const override { return rounds_; }

  const Eigen::VectorXd& mean_weights() const { return mu_; }
  const DesignMatrix& design() const { return design_; }

 private:
  PolicyConfig cfg_;
  Exploration exploration_;
  DesignMatrix design_;
  Eigen::VectorXd b_;
  Eigen::VectorXd mu_;
  std::size_t rounds_ = 0;
};

/// RBF kernel k(x, y) = exp(-gamma * ||x - y||^2).
double rbf_kernel(const Eigen::Ref<const Eigen::VectorXd>& x,
                  const Eigen::Ref<const Eigen::VectorXd>& y, double gamma);

/// Kernel ridge posterior: mean k^T (K + lambda I)^{-1} r and variance
/// k(x, x) - k^T (K + lambda I)^{-1} k. The inverse grows by block updates.
class KernelPosterior {
 public:
  KernelPosterior(double gamma, double lambda);

  void add(const Eigen::VectorXd& x, double reward);
  double mean(const Eigen::VectorXd& x) const;
  double variance(const Eigen::VectorXd& x) const;
  std::size_t size() const { return points_.size(); }
  const Eigen::MatrixXd& inverse() const { return inverse_; }

 private:
  Eigen::VectorXd kernel_vector(const Eigen::VectorXd& x) const;
  void rebuild();

  double gamma_;
  double lambda_;
  std::vector<Eigen::VectorXd> points_;
  Eigen::VectorXd rewards_;
  Eigen::MatrixXd inverse_;
  Eigen::VectorXd alpha_;
};

class KernelPolicy final : public Policy {
 public:
  enum class Exploration { sample, ucb };

  KernelPolicy(const PolicyConfig& cfg, Exploration exploration);

  Decision select(std::span<const Context> contexts, Rng& rng) const override;
  void observe(const Context& context, double reward) override;
  std::string_view name() const override;
  std::size_t observations() const override { return rounds_; }

  const KernelPosterior& posterior() const { return posterior_; }

 private:
  PolicyConfig cfg_;
  Exploration exploration_;
  KernelPosterior posterior_;
  std::size_t rounds_ = 0;
};

class UniformPolicy final : public Policy {
 public:
  Decision select(std::span<const Context> contexts, Rng& rng) const override;
  void observe(const Context&, double) override { ++rounds_; }
  std::string_view name() const override { return "uniform"; }
  std::size_t observations() const override { return rounds_; }

 private:
  std::size_t rounds_ = 0;
};

}  // namespace banditbench
