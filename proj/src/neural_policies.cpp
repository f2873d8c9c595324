#include <cmath>
#include <stdexcept>

#include "banditbench/policies.hpp"

namespace banditbench {

namespace {

bool should_train(long stop_train, std::size_t round) {
  return stop_train == kTrainForever || round <= static_cast<std::size_t>(stop_train);
}

void require_arms(std::span<const Context> contexts) {
  if (contexts.empty()) throw std::invalid_argument("select: no arms");
}

}  // namespace

NeuralRegressor::NeuralRegressor(const nn::NetShape& shape, const nn::TrainConfig& train,
                                 bool warm_start, std::uint64_t seed)
    : train_(train),
      warm_start_(warm_start),
      anchor_(nn::init_params(shape, seed)),
      theta_(anchor_),
      rng_(mix_seed(seed, stream::kObserve)) {}

void NeuralRegressor::append(const Context& x, double reward) {
  if (!std::isfinite(reward)) throw std::invalid_argument("observe: non-finite reward");
  if (x.size() != anchor_.shape().input_dim) {
    throw std::invalid_argument("observe: context has the wrong dimension");
  }
  history_.push_back({x, reward});
}

void NeuralRegressor::fit() {
  theta_ = nn::train(anchor_, warm_start_ ? theta_ : anchor_, history_, train_, rng_);
}

// NeuralTS / NeuralUCB ---------------------------------------------------------

NeuralPolicy::NeuralPolicy(const PolicyConfig& cfg, int context_dim, std::uint64_t seed,
                           Exploration exploration)
    : cfg_(cfg),
      exploration_(exploration),
      model_(nn::NetShape{context_dim, cfg.width, cfg.depth}, cfg.effective_train(),
             cfg.warm_start, network_seed(seed, 0)),
      design_(cfg.posterior, nn::NetShape{context_dim, cfg.width, cfg.depth}.param_count(),
              cfg.lambda, static_cast<double>(cfg.width)) {}

std::string_view NeuralPolicy::name() const {
  return exploration_ == Exploration::sample ? "neural_ts" : "neural_ucb";
}

Decision NeuralPolicy::select(std::span<const Context> contexts, Rng& rng) const {
  require_arms(contexts);
  const std::size_t k = contexts.size();
  Decision d;
  d.scores.resize(k);
  d.means.resize(k);
  d.sigmas.resize(k);
  for (std::size_t a = 0; a < k; ++a) {
    const nn::ValueAndGrad vg = nn::forward_and_grad(model_.theta(), contexts[a]);
    d.means[a] = vg.value;
    d.sigmas[a] = design_.sigma(vg.grad);
    if (exploration_ == Exploration::sample) {
      d.scores[a] = vg.value + cfg_.nu * d.sigmas[a] * standard_normal(rng);
    } else {
      d.scores[a] = vg.value + cfg_.nu * d.sigmas[a];
    }
  }
  d.arm = argmax_lowest(d.scores);
  return d;
}

void NeuralPolicy::observe(const Context& context, double reward) {
  model_.append(context, reward);
  ++rounds_;
  if (should_train(cfg_.stop_train, rounds_)) model_.fit();
  design_.update(nn::grad(model_.theta(), context));
}

// epsilon-greedy ---------------------------------------------------------------

EpsilonGreedyPolicy::EpsilonGreedyPolicy(const PolicyConfig& cfg, int context_dim,
                                         std::uint64_t seed)
    : cfg_(cfg),
      model_(nn::NetShape{context_dim, cfg.width, cfg.depth}, cfg.effective_train(),
             cfg.warm_start, network_seed(seed, 0)) {}

Decision EpsilonGreedyPolicy::select(std::span<const Context> contexts, Rng& rng) const {
  require_arms(contexts);
  const std::size_t k = contexts.size();
  Decision d;
  d.means.resize(k);
  d.sigmas.assign(k, 0.0);
  for (std::size_t a = 0; a < k; ++a) d.means[a] = model_.predict(contexts[a]);
  d.scores = d.means;
  if (uniform01(rng) < cfg_.epsilon) {
    d.arm = uniform_index(rng, k);
    // Scores reflect the decision so that arm == argmax_lowest(scores).
    d.scores.assign(k, 0.0);
    d.scores[d.arm] = 1.0;
  } else {
    d.arm = argmax_lowest(d.scores);
  }
  return d;
}

void EpsilonGreedyPolicy::observe(const Context& context, double reward) {
  model_.append(context, reward);
  ++rounds_;
  if (should_train(cfg_.stop_train, rounds_)) model_.fit();
}

// BootstrapNN ------------------------------------------------------------------

BootstrapPolicy::BootstrapPolicy(const PolicyConfig& cfg, int context_dim, std::uint64_t seed)
    : cfg_(cfg), inclusion_rng_(mix_seed(seed, stream::kObserve)) {
  const nn::NetShape shape{context_dim, cfg.width, cfg.depth};
  models_.reserve(static_cast<std::size_t>(cfg.bootstrap_networks));
  for (int i = 0; i < cfg.bootstrap_networks; ++i) {
    models_.emplace_back(shape, cfg.effective_train(), cfg.warm_start, network_seed(seed, i));
  }
}

Decision BootstrapPolicy::select(std::span<const Context> contexts, Rng& rng) const {
  require_arms(contexts);
  const NeuralRegressor& model = models_[uniform_index(rng, models_.size())];
  const std::size_t k = contexts.size();
  Decision d;
  d.means.resize(k);
  d.sigmas.assign(k, 0.0);
  for (std::size_t a = 0; a < k; ++a) d.means[a] = model.predict(contexts[a]);
  d.scores = d.means;
  d.arm = argmax_lowest(d.scores);
  return d;
}

void BootstrapPolicy::observe(const Context& context, double reward) {
  ++rounds_;
  const bool train = should_train(cfg_.stop_train, rounds_);
  for (NeuralRegressor& model : models_) {
    if (uniform01(inclusion_rng_) < cfg_.bootstrap_inclusion) {
      ++inclusions_;
      model.append(context, reward);
      if (train) model.fit();
    }
  }
}

}  // namespace banditbench
