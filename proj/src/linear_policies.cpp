#include <cmath>
#include <stdexcept>

#include "banditbench/policies.hpp"

namespace banditbench {

LinearPolicy::LinearPolicy(const PolicyConfig& cfg, int context_dim, Exploration exploration)
    : cfg_(cfg),
      exploration_(exploration),
      design_(PosteriorMode::full, static_cast<std::size_t>(context_dim), cfg.lambda, 1.0),
      b_(Eigen::VectorXd::Zero(context_dim)),
      mu_(Eigen::VectorXd::Zero(context_dim)) {}

std::string_view LinearPolicy::name() const {
  return exploration_ == Exploration::sample ? "lin_ts" : "lin_ucb";
}

Decision LinearPolicy::select(std::span<const Context> contexts, Rng& rng) const {
  if (contexts.empty()) throw std::invalid_argument("select: no arms");
  const std::size_t k = contexts.size();
  Decision d;
  d.scores.resize(k);
  d.means.resize(k);
  d.sigmas.resize(k);
  for (std::size_t a = 0; a < k; ++a) {
    const Context& x = contexts[a];
    d.means[a] = x.dot(mu_);
    d.sigmas[a] = std::sqrt(std::max(0.0, design_.quadratic_form(x)));
    if (exploration_ == Exploration::sample) {
      d.scores[a] = d.means[a] + cfg_.nu * d.sigmas[a] * standard_normal(rng);
    } else {
      d.scores[a] = d.means[a] + cfg_.nu * d.sigmas[a];
    }
  }
  d.arm = argmax_lowest(d.scores);
  return d;
}

void LinearPolicy::observe(const Context& context, double reward) {
  if (!std::isfinite(reward)) throw std::invalid_argument("observe: non-finite reward");
  design_.update(context);
  b_ += reward * context;
  mu_.noalias() = design_.inverse() * b_;
  ++rounds_;
}

}  // namespace banditbench
