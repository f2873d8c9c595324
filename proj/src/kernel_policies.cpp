#include <cmath>
#include <stdexcept>

#include "banditbench/policies.hpp"

namespace banditbench {

double rbf_kernel(const Eigen::Ref<const Eigen::VectorXd>& x,
                  const Eigen::Ref<const Eigen::VectorXd>& y, double gamma) {
  return std::exp(-gamma * (x - y).squaredNorm());
}

KernelPosterior::KernelPosterior(double gamma, double lambda) : gamma_(gamma), lambda_(lambda) {
  if (!(gamma > 0.0) || !(lambda > 0.0)) {
    throw std::invalid_argument("KernelPosterior: gamma and lambda must be positive");
  }
}

Eigen::VectorXd KernelPosterior::kernel_vector(const Eigen::VectorXd& x) const {
  Eigen::VectorXd k(static_cast<Eigen::Index>(points_.size()));
  for (std::size_t i = 0; i < points_.size(); ++i) {
    k[static_cast<Eigen::Index>(i)] = rbf_kernel(points_[i], x, gamma_);
  }
  return k;
}

double KernelPosterior::mean(const Eigen::VectorXd& x) const {
  if (points_.empty()) return 0.0;
  return kernel_vector(x).dot(alpha_);
}

double KernelPosterior::variance(const Eigen::VectorXd& x) const {
  const double prior = rbf_kernel(x, x, gamma_);
  if (points_.empty()) return prior;
  const Eigen::VectorXd k = kernel_vector(x);
  return std::max(0.0, prior - k.dot(inverse_ * k));
}

void KernelPosterior::add(const Eigen::VectorXd& x, double reward) {
  if (!std::isfinite(reward)) throw std::invalid_argument("observe: non-finite reward");
  if (!points_.empty() && x.size() != points_.front().size()) {
    throw std::invalid_argument("observe: context has the wrong dimension");
  }
  const Eigen::VectorXd k = kernel_vector(x);
  const double c = rbf_kernel(x, x, gamma_) + lambda_;
  const auto n = static_cast<Eigen::Index>(points_.size());

  points_.push_back(x);
  rewards_.conservativeResize(n + 1);
  rewards_[n] = reward;

  // Block inverse of [[K + lambda I, k], [k^T, c]] via the Schur complement.
  const Eigen::VectorXd mk = n > 0 ? Eigen::VectorXd(inverse_ * k) : Eigen::VectorXd();
  const double schur = n > 0 ? c - k.dot(mk) : c;
  if (!(schur > 0.0) || !std::isfinite(schur)) {
    rebuild();
    return;
  }
  Eigen::MatrixXd next(n + 1, n + 1);
  if (n > 0) {
    next.topLeftCorner(n, n) = inverse_ + mk * mk.transpose() / schur;
    next.topRightCorner(n, 1) = -mk / schur;
    next.bottomLeftCorner(1, n) = -mk.transpose() / schur;
  }
  next(n, n) = 1.0 / schur;
  inverse_ = std::move(next);
  alpha_ = inverse_ * rewards_;
}

void KernelPosterior::rebuild() {
  const auto n = static_cast<Eigen::Index>(points_.size());
  Eigen::MatrixXd gram(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      gram(i, j) = gram(j, i) = rbf_kernel(points_[static_cast<std::size_t>(i)],
                                           points_[static_cast<std::size_t>(j)], gamma_);
    }
  }
  gram.diagonal().array() += lambda_;
  inverse_ = gram.llt().solve(Eigen::MatrixXd::Identity(n, n));
  alpha_ = inverse_ * rewards_;
}

KernelPolicy::KernelPolicy(const PolicyConfig& cfg, Exploration exploration)
    : cfg_(cfg), exploration_(exploration), posterior_(cfg.kernel_gamma, cfg.lambda) {}

std::string_view KernelPolicy::name() const {
  return exploration_ == Exploration::sample ? "kernel_ts" : "kernel_ucb";
}

Decision KernelPolicy::select(std::span<const Context> contexts, Rng& rng) const {
  if (contexts.empty()) throw std::invalid_argument("select: no arms");
  const std::size_t k = contexts.size();
  Decision d;
  d.scores.resize(k);
  d.means.resize(k);
  d.sigmas.resize(k);
  for (std::size_t a = 0; a < k; ++a) {
    d.means[a] = posterior_.mean(contexts[a]);
    d.sigmas[a] = std::sqrt(posterior_.variance(contexts[a]));
    if (exploration_ == Exploration::sample) {
      d.scores[a] = d.means[a] + cfg_.nu * d.sigmas[a] * standard_normal(rng);
    } else {
      d.scores[a] = d.means[a] + cfg_.nu * d.sigmas[a];
    }
  }
  d.arm = argmax_lowest(d.scores);
  return d;
}

void KernelPolicy::observe(const Context& context, double reward) {
  ++rounds_;
  // The kernel matrix is frozen once the training budget is spent.
  if (cfg_.stop_train != kTrainForever &&
      rounds_ > static_cast<std::size_t>(cfg_.stop_train)) {
    return;
  }
  posterior_.add(context, reward);
}

}  // namespace banditbench
