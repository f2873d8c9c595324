#include <array>
#include <cmath>

#include <gtest/gtest.h>

#include "banditbench/data.hpp"
#include "banditbench/policies.hpp"
#include "support/oracles.hpp"

namespace bb = banditbench;

namespace {

bb::PolicyConfig small_config(bb::Algorithm algo) {
  bb::PolicyConfig cfg;
  cfg.algorithm = algo;
  cfg.width = 8;
  cfg.train.iterations = 10;
  cfg.train.step_size = 0.01;
  cfg.posterior = bb::PosteriorMode::full;
  return cfg;
}

std::vector<bb::Context> duplicated_contexts(int k, int raw_dim, bb::Rng& rng) {
  std::vector<bb::Context> out;
  for (int i = 0; i < k; ++i) {
    out.push_back(bb::data::duplicate_half(oracle::random_unit(raw_dim, rng)));
  }
  return out;
}

// Same decision sequence for two policies fed identical data and select
// engines seeded alike.
std::vector<std::size_t> decisions(bb::Policy& policy, std::uint64_t data_seed, int rounds,
                                   int k, int raw_dim, std::uint64_t select_seed) {
  bb::Rng data_rng(data_seed), select_rng(select_seed);
  std::vector<std::size_t> arms;
  for (int t = 0; t < rounds; ++t) {
    const auto contexts = duplicated_contexts(k, raw_dim, data_rng);
    const bb::Decision d = policy.select(contexts, select_rng);
    arms.push_back(d.arm);
    policy.observe(contexts[d.arm], contexts[d.arm][0] > 0 ? 1.0 : 0.0);
  }
  return arms;
}

}  // namespace

TEST(Algorithm, ParseRoundTrip) {
  for (auto a : {bb::Algorithm::neural_ts, bb::Algorithm::neural_ucb, bb::Algorithm::lin_ts,
                 bb::Algorithm::lin_ucb, bb::Algorithm::kernel_ts, bb::Algorithm::kernel_ucb,
                 bb::Algorithm::eps_greedy, bb::Algorithm::bootstrap_nn,
                 bb::Algorithm::uniform}) {
    EXPECT_EQ(bb::parse_algorithm(bb::to_string(a)), a);
  }
  EXPECT_THROW(bb::parse_algorithm("neuralts"), std::invalid_argument);
}

TEST(PolicyConfig, Validation) {
  bb::PolicyConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.epsilon = 1.5;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.bootstrap_networks = 0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.lambda = 0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.width = 7;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.train.step_size = 0.5;  // 0.5 * 100 * 1 >= 1
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
}

TEST(Argmax, LowestIndexTieBreak) {
  EXPECT_EQ(bb::argmax_lowest(std::array{0.1, 0.9, 0.3}), 1u);
  EXPECT_EQ(bb::argmax_lowest(std::array{0.5, 0.5, 0.5}), 0u);
  EXPECT_EQ(bb::argmax_lowest(std::array{0.1, 0.7, 0.7}), 1u);
}

TEST(NeuralTs, GreedyWhenNuZero) {
  auto cfg = small_config(bb::Algorithm::neural_ts);
  cfg.nu = 0.0;
  bb::NeuralPolicy ts(cfg, 8, 3, bb::NeuralPolicy::Exploration::sample);
  bb::Rng rng(1);
  for (int i = 0; i < 5; ++i) {
    const auto contexts = duplicated_contexts(3, 4, rng);
    ts.observe(contexts[0], 1.0);
    const bb::Decision d = ts.select(contexts, rng);
    EXPECT_EQ(d.scores, d.means);
    EXPECT_EQ(d.arm, bb::argmax_lowest(d.means));
  }
}

TEST(NeuralTs, NuZeroMatchesNeuralUcbNuZero) {
  auto cfg = small_config(bb::Algorithm::neural_ts);
  cfg.nu = 0.0;
  bb::NeuralPolicy ts(cfg, 8, 5, bb::NeuralPolicy::Exploration::sample);
  bb::NeuralPolicy ucb(cfg, 8, 5, bb::NeuralPolicy::Exploration::ucb);
  EXPECT_EQ(decisions(ts, 11, 30, 3, 4, 1), decisions(ucb, 11, 30, 3, 4, 2));
}

// At theta_0 every mean is zero, so arm k wins with the probability that its
// N(0, (nu sigma_k)^2) draw is the largest.
TEST(NeuralTs, FreshSelectionFrequenciesMatchMonteCarlo) {
  auto cfg = small_config(bb::Algorithm::neural_ts);
  cfg.nu = 1.0;
  const bb::NeuralPolicy ts(cfg, 8, 21, bb::NeuralPolicy::Exploration::sample);
  bb::Rng rng(4);
  const auto contexts = duplicated_contexts(4, 4, rng);
  bb::Rng probe_rng(0);
  const bb::Decision probe = ts.select(contexts, probe_rng);
  for (double mean : probe.means) ASSERT_NEAR(mean, 0.0, 1e-12);

  std::array<double, 4> expected{};
  const int mc = 1'000'000;
  bb::Rng mc_rng(99);
  for (int i = 0; i < mc; ++i) {
    std::array<double, 4> draw{};
    for (int k = 0; k < 4; ++k) draw[k] = probe.sigmas[k] * bb::standard_normal(mc_rng);
    expected[bb::argmax_lowest(draw)] += 1.0 / mc;
  }

  std::array<double, 4> counts{};
  const int n = 10000;
  bb::Rng select_rng(7);
  for (int i = 0; i < n; ++i) counts[ts.select(contexts, select_rng).arm] += 1;
  double chi2 = 0.0;
  for (int k = 0; k < 4; ++k) {
    const double e = expected[k] * n;
    chi2 += (counts[k] - e) * (counts[k] - e) / e;
  }
  // 99th percentile of chi-square with 3 degrees of freedom.
  EXPECT_LT(chi2, 11.345);
}

TEST(NeuralTs, SelectDoesNotMutate) {
  auto cfg = small_config(bb::Algorithm::neural_ts);
  bb::NeuralPolicy ts(cfg, 8, 5, bb::NeuralPolicy::Exploration::sample);
  bb::Rng rng(2);
  const auto contexts = duplicated_contexts(3, 4, rng);
  ts.observe(contexts[1], 0.5);
  const Eigen::VectorXd theta = ts.model().theta().flat();
  const Eigen::MatrixXd inv = ts.design().inverse();
  for (int i = 0; i < 10; ++i) ts.select(contexts, rng);
  EXPECT_EQ(ts.model().theta().flat(), theta);
  EXPECT_EQ(ts.design().inverse(), inv);
}

TEST(NeuralTs, StopTrainZeroKeepsThetaButGrowsDesign) {
  auto cfg = small_config(bb::Algorithm::neural_ts);
  cfg.stop_train = 0;
  bb::NeuralPolicy ts(cfg, 8, 5, bb::NeuralPolicy::Exploration::sample);
  bb::Rng rng(3);
  for (int i = 0; i < 5; ++i) ts.observe(duplicated_contexts(1, 4, rng)[0], 1.0);
  EXPECT_EQ(ts.model().theta().flat(), ts.model().anchor().flat());
  EXPECT_EQ(ts.design().updates(), 5u);
  EXPECT_GT(ts.design().log_det(), std::log(cfg.lambda) * ts.design().dim());
}

TEST(NeuralTs, ObserveTwiceIsNotDeduplicated) {
  auto cfg = small_config(bb::Algorithm::neural_ts);
  bb::NeuralPolicy once(cfg, 8, 5, bb::NeuralPolicy::Exploration::sample);
  bb::NeuralPolicy twice(cfg, 8, 5, bb::NeuralPolicy::Exploration::sample);
  bb::Rng rng(3);
  const auto x = duplicated_contexts(1, 4, rng)[0];
  once.observe(x, 1.0);
  twice.observe(x, 1.0);
  twice.observe(x, 1.0);
  EXPECT_NE(once.design().inverse(), twice.design().inverse());
  EXPECT_EQ(twice.model().history().size(), 2u);
}

// The maintained log det equals the sum of log(1 + g^T U^{-1} g / m) recomputed
// from the same features against a direct inverse.
TEST(NeuralTs, LogDetTracksRecomputedIncrements) {
  auto cfg = small_config(bb::Algorithm::neural_ts);
  bb::NeuralPolicy ts(cfg, 8, 8, bb::NeuralPolicy::Exploration::sample);
  const auto p = static_cast<Eigen::Index>(ts.design().dim());
  Eigen::MatrixXd U = cfg.lambda * Eigen::MatrixXd::Identity(p, p);
  double expected = p * std::log(cfg.lambda);
  bb::Rng rng(5);
  for (int i = 0; i < 12; ++i) {
    const auto x = duplicated_contexts(1, 4, rng)[0];
    ts.observe(x, bb::uniform01(rng));
    const Eigen::VectorXd g = bb::nn::grad(ts.model().theta(), x);
    expected += std::log1p(g.dot(U.ldlt().solve(g)) / cfg.width);
    U += g * g.transpose() / cfg.width;
  }
  EXPECT_NEAR(ts.design().log_det(), expected, 1e-8);
}

TEST(NeuralUcb, LargerBonusWins) {
  // Zero means at theta_0; arm 1 gets the larger sigma by scaling its context.
  auto cfg = small_config(bb::Algorithm::neural_ucb);
  cfg.nu = 0.1;
  bb::NeuralPolicy ucb(cfg, 4, 3, bb::NeuralPolicy::Exploration::ucb);
  const Eigen::Vector4d x = bb::data::duplicate_half(Eigen::Vector2d(0.6, 0.8));
  const std::vector<bb::Context> contexts{x, 2.0 * x};
  bb::Rng rng(0);
  const bb::Decision d = ucb.select(contexts, rng);
  EXPECT_NEAR(d.means[0], 0.0, 1e-12);
  EXPECT_NEAR(d.sigmas[1], 2.0 * d.sigmas[0], 1e-12);
  EXPECT_EQ(d.arm, 1u);
}

TEST(NeuralUcb, Deterministic) {
  auto cfg = small_config(bb::Algorithm::neural_ucb);
  bb::NeuralPolicy ucb(cfg, 8, 3, bb::NeuralPolicy::Exploration::ucb);
  bb::Rng rng(1), a(1), b(2);
  const auto contexts = duplicated_contexts(4, 4, rng);
  ucb.observe(contexts[2], 1.0);
  EXPECT_EQ(ucb.select(contexts, a).scores, ucb.select(contexts, b).scores);
}

TEST(Linear, RidgeArithmetic) {
  auto cfg = small_config(bb::Algorithm::lin_ucb);
  cfg.lambda = 1.0;
  bb::LinearPolicy lin(cfg, 1, bb::LinearPolicy::Exploration::ucb);
  bb::Rng rng(0);
  const std::vector<bb::Context> unit{Eigen::VectorXd::Ones(1)};
  EXPECT_DOUBLE_EQ(lin.select(unit, rng).sigmas[0], 1.0);
  lin.observe(Eigen::VectorXd::Ones(1), 1.0);
  lin.observe(Eigen::VectorXd::Ones(1), 0.0);
  EXPECT_NEAR(lin.mean_weights()[0], 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(lin.select(unit, rng).sigmas[0], std::sqrt(1.0 / 3.0), 1e-15);
}

TEST(Linear, TsWithNuZeroIsGreedy) {
  auto cfg = small_config(bb::Algorithm::lin_ts);
  cfg.nu = 0.0;
  bb::LinearPolicy ts(cfg, 8, bb::LinearPolicy::Exploration::sample);
  bb::LinearPolicy ucb(cfg, 8, bb::LinearPolicy::Exploration::ucb);
  EXPECT_EQ(decisions(ts, 4, 40, 3, 4, 1), decisions(ucb, 4, 40, 3, 4, 9));
}

TEST(Kernel, Examples) {
  bb::KernelPosterior empty(1.0, 1.0);
  EXPECT_DOUBLE_EQ(empty.variance(Eigen::Vector2d(0.3, -0.4)), 1.0);

  bb::KernelPosterior tight(1.0, 1e-9);
  const Eigen::Vector2d x(0.2, 0.1);
  tight.add(x, 0.75);
  EXPECT_NEAR(tight.mean(x), 0.75, 1e-8);
  EXPECT_NEAR(tight.variance(x), 0.0, 1e-8);
}

TEST(Kernel, MatchesDenseSolve) {
  const std::vector<Eigen::Vector2d> pts{{0, 0}, {1, 0.5}, {-0.3, 0.8}};
  const Eigen::Vector3d r(1.0, -0.5, 0.25);
  bb::KernelPosterior post(1.0, 1.0);
  for (int i = 0; i < 3; ++i) post.add(pts[i], r[i]);
  Eigen::Matrix3d K;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) K(i, j) = std::exp(-(pts[i] - pts[j]).squaredNorm());
  }
  const Eigen::Matrix3d A = K + Eigen::Matrix3d::Identity();
  const Eigen::Vector2d q(0.4, 0.1);
  Eigen::Vector3d k;
  for (int i = 0; i < 3; ++i) k[i] = std::exp(-(q - pts[i]).squaredNorm());
  EXPECT_NEAR(post.mean(q), k.dot(A.partialPivLu().solve(r)), 1e-10);
  EXPECT_NEAR(post.variance(q), 1.0 - k.dot(A.partialPivLu().solve(k)), 1e-10);
  EXPECT_NEAR(bb::rbf_kernel(pts[1], pts[2], 1.0), K(1, 2), 1e-15);
}

TEST(Kernel, FrozenAfterStopTrain) {
  auto cfg = small_config(bb::Algorithm::kernel_ucb);
  cfg.stop_train = 3;
  bb::KernelPolicy kp(cfg, bb::KernelPolicy::Exploration::ucb);
  bb::Rng rng(1);
  for (int i = 0; i < 6; ++i) kp.observe(oracle::random_unit(3, rng), 1.0);
  EXPECT_EQ(kp.posterior().size(), 3u);
  EXPECT_EQ(kp.observations(), 6u);
}

TEST(EpsGreedy, EpsilonOneIsUniform) {
  auto cfg = small_config(bb::Algorithm::eps_greedy);
  cfg.epsilon = 1.0;
  const bb::EpsilonGreedyPolicy eg(cfg, 8, 1);
  bb::Rng rng(2);
  const auto contexts = duplicated_contexts(4, 4, rng);
  std::array<int, 4> counts{};
  const int n = 10000;
  for (int i = 0; i < n; ++i) ++counts[eg.select(contexts, rng).arm];
  for (int c : counts) EXPECT_NEAR(c, n / 4.0, 3 * std::sqrt(n * 0.25 * 0.75));
}

TEST(EpsGreedy, NonGreedyArmFrequency) {
  auto cfg = small_config(bb::Algorithm::eps_greedy);
  cfg.epsilon = 0.1;
  bb::EpsilonGreedyPolicy eg(cfg, 20, 1);
  bb::Rng rng(3);
  // Train toward arm 0 so that greedy is unambiguous.
  std::vector<bb::Context> contexts;
  for (int k = 0; k < 10; ++k) {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(10);
    x[k] = 1.0;
    contexts.push_back(bb::data::duplicate_half(x));
  }
  eg.observe(contexts[0], 1.0);
  std::vector<double> means(10);
  for (int k = 0; k < 10; ++k) means[k] = eg.model().predict(contexts[k]);
  const std::size_t greedy = bb::argmax_lowest(means);

  std::array<int, 10> counts{};
  const int n = 10000;
  for (int i = 0; i < n; ++i) ++counts[eg.select(contexts, rng).arm];
  const double p = 0.01;
  for (int k = 0; k < 10; ++k) {
    if (static_cast<std::size_t>(k) == greedy) {
      EXPECT_NEAR(counts[k], n * 0.91, 3 * std::sqrt(n * 0.91 * 0.09));
    } else {
      EXPECT_NEAR(counts[k], n * p, 3 * std::sqrt(n * p * (1 - p)));
    }
  }
}

TEST(Bootstrap, SingleFullInclusionMatchesGreedy) {
  auto cfg = small_config(bb::Algorithm::bootstrap_nn);
  cfg.bootstrap_networks = 1;
  cfg.bootstrap_inclusion = 1.0;
  bb::BootstrapPolicy boot(cfg, 8, 13);
  auto eg_cfg = cfg;
  eg_cfg.algorithm = bb::Algorithm::eps_greedy;
  eg_cfg.epsilon = 0.0;
  bb::EpsilonGreedyPolicy eg(eg_cfg, 8, 13);
  EXPECT_EQ(decisions(boot, 6, 30, 3, 4, 1), decisions(eg, 6, 30, 3, 4, 2));
}

TEST(Bootstrap, ZeroInclusionNeverTrains) {
  auto cfg = small_config(bb::Algorithm::bootstrap_nn);
  cfg.bootstrap_networks = 3;
  cfg.bootstrap_inclusion = 0.0;
  bb::BootstrapPolicy boot(cfg, 8, 2);
  bb::Rng rng(1);
  for (int i = 0; i < 10; ++i) boot.observe(duplicated_contexts(1, 4, rng)[0], 1.0);
  for (const auto& m : boot.models()) EXPECT_EQ(m.theta().flat(), m.anchor().flat());
  EXPECT_EQ(boot.inclusions(), 0u);
}

TEST(Bootstrap, InclusionFrequency) {
  auto cfg = small_config(bb::Algorithm::bootstrap_nn);
  cfg.bootstrap_networks = 1;
  cfg.bootstrap_inclusion = 0.8;
  cfg.stop_train = 0;  // bookkeeping only; no training needed
  bb::BootstrapPolicy boot(cfg, 8, 2);
  bb::Rng rng(1);
  const auto x = duplicated_contexts(1, 4, rng)[0];
  const int n = 1000;
  for (int i = 0; i < n; ++i) boot.observe(x, 0.0);
  EXPECT_NEAR(static_cast<double>(boot.inclusions()), n * 0.8, 3 * std::sqrt(n * 0.8 * 0.2));
}

TEST(Policies, SeedReproducibility) {
  for (auto algo : {bb::Algorithm::neural_ts, bb::Algorithm::neural_ucb, bb::Algorithm::lin_ts,
                    bb::Algorithm::lin_ucb, bb::Algorithm::kernel_ts, bb::Algorithm::kernel_ucb,
                    bb::Algorithm::eps_greedy, bb::Algorithm::bootstrap_nn,
                    bb::Algorithm::uniform}) {
    auto cfg = small_config(algo);
    cfg.bootstrap_networks = 3;
    cfg.train.mode = bb::nn::TrainMode::minibatch_sgd;
    cfg.train.batch_size = 4;
    auto a = bb::make_policy(cfg, 8, 42);
    auto b = bb::make_policy(cfg, 8, 42);
    EXPECT_EQ(decisions(*a, 3, 25, 3, 4, 5), decisions(*b, 3, 25, 3, 4, 5)) << a->name();
  }
}
