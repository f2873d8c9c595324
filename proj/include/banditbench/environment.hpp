#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "banditbench/data.hpp"
#include "banditbench/policies.hpp"
#include "banditbench/rng.hpp"

namespace banditbench {

/// One round as seen by the harness: arm contexts, the expected reward of
/// each arm, and the reward actually paid if that arm is pulled.
struct Round {
  std::vector<Context> contexts;
  std::vector<double> expected;
  std::vector<double> realized;
  int label = -1;  // correct arm for classification streams
};

class Environment {
 public:
  virtual ~Environment() = default;
  /// Maximum number of rounds this environment can serve.
  virtual std::size_t capacity() const = 0;
  virtual int num_arms() const = 0;
  virtual int context_dim() const = 0;
  /// Rounds must be requested in order t = 0, 1, ...
  virtual Round next() = 0;
};

/// Classification-to-bandit stream: one dataset row per round, arm k gets the
/// disjoint-encoded context for class k and pays 1 iff k is the label.
class ClassificationEnvironment final : public Environment {
 public:
  ClassificationEnvironment(std::shared_ptr<const data::LabeledDataset> dataset,
                            data::ContextPipeline pipeline, std::uint64_t shuffle_seed);

  std::size_t capacity() const override { return dataset_.size(); }
  int num_arms() const override { return dataset_.num_classes; }
  int context_dim() const override;
  Round next() override;

  std::size_t zero_feature_rows() const { return zero_rows_; }

 private:
  data::LabeledDataset dataset_;
  data::ContextPipeline pipeline_;
  std::size_t cursor_ = 0;
  std::size_t zero_rows_ = 0;
};

enum class SyntheticReward { cosine, linear };

struct SyntheticSpec {
  SyntheticReward reward = SyntheticReward::cosine;
  int num_arms = 4;
  int raw_dim = 8;
  double noise = 0.1;
  double frequency = 3.0;  // h(x) = cos(frequency * x^T a)
  std::size_t capacity = 1'000'000;
};

/// Each arm gets its own context drawn uniformly from the unit sphere in
/// R^raw_dim; rewards are h(x) plus Gaussian noise. The hidden direction `a`
/// (or w*) is a unit vector drawn from the seed.
class SyntheticEnvironment final : public Environment {
 public:
  SyntheticEnvironment(const SyntheticSpec& spec, bool duplicate_half, std::uint64_t seed);

  std::size_t capacity() const override { return spec_.capacity; }
  int num_arms() const override { return spec_.num_arms; }
  int context_dim() const override { return spec_.raw_dim * (duplicate_half_ ? 2 : 1); }
  Round next() override;

  double reward_function(const Eigen::VectorXd& raw) const;
  const Eigen::VectorXd& direction() const { return direction_; }

 private:
  SyntheticSpec spec_;
  bool duplicate_half_;
  Eigen::VectorXd direction_;
  Rng context_rng_;
  Rng noise_rng_;
};

Eigen::VectorXd random_unit_vector(int dim, Rng& rng);

}  // namespace banditbench
