#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "banditbench/data.hpp"
#include "banditbench/environment.hpp"
#include "banditbench/keyvalue.hpp"
#include "banditbench/policies.hpp"

namespace banditbench {

/// Everything needed to reproduce a set of episodes.
///
/// `dataset` is one of
///   synthetic:cosine | synthetic:linear
///   csv:<path>           (schema from `schema`, else <path>.schema)
///   idx:<images>,<labels>
/// A bare path is read as CSV.
struct ExperimentConfig {
  std::string dataset = "synthetic:cosine";
  std::string schema;
  SyntheticSpec synthetic;
  PolicyConfig policy;
  std::size_t horizon = 2000;
  int repeats = 8;
  std::uint64_t seed = 0;
  // Observations are delivered in batches of `delay` rounds; 0 means every round.
  std::size_t delay = 0;
  // Unset: duplicated-half contexts for neural policies only.
  std::optional<bool> duplicate_half;
  std::vector<double> grid_lambda;
  std::vector<double> grid_nu;
  std::vector<double> grid_epsilon;
  int threads = 0;

  void validate() const;
  bool use_duplicate_half() const;
  /// Seed of repeat `index`: seed XOR index.
  std::uint64_t repeat_seed(std::size_t index) const { return seed ^ index; }

  /// Applies keys from a key-value config (see README for the key list).
  void apply(const KeyValueFile& kv);
};

/// Grid from the tuning protocol for `algo`: neural TS/UCB search lambda and
/// nu, linear/kernel baselines fix lambda = 1 and search nu, epsilon-greedy
/// searches epsilon.
void apply_default_grid(ExperimentConfig& cfg);

/// A dataset loaded once and turned into fresh environments per episode.
class DatasetSource {
 public:
  explicit DatasetSource(const ExperimentConfig& cfg);

  std::unique_ptr<Environment> open(const ExperimentConfig& cfg, std::uint64_t seed) const;
  /// Null for synthetic sources.
  std::shared_ptr<const data::LabeledDataset> dataset() const { return dataset_; }
  bool synthetic() const { return dataset_ == nullptr; }

 private:
  std::shared_ptr<const data::LabeledDataset> dataset_;
};

struct RoundRecord {
  std::size_t t = 0;
  std::size_t arm = 0;
  double reward = 0.0;
  double optimal = 0.0;  // best expected reward this round
  double regret = 0.0;   // optimal - expected reward of the chosen arm
  double cumulative = 0.0;
  double sigma = 0.0;    // posterior scale of the chosen arm, 0 if none
  bool flushed = false;  // observations were delivered after this round
  std::int64_t wall_us = 0;

  friend bool operator==(const RoundRecord&, const RoundRecord&) = default;
};

struct RegretTrace {
  std::string algorithm;
  std::size_t repeat = 0;
  std::uint64_t seed = 0;
  std::size_t delay = 0;
  double lambda = 0.0;
  double nu = 0.0;
  double epsilon = 0.0;
  std::vector<RoundRecord> rounds;

  double total_regret() const { return rounds.empty() ? 0.0 : rounds.back().cumulative; }
  friend bool operator==(const RegretTrace&, const RegretTrace&) = default;
};

/// Called after every round with the policy as it will act next round.
using RoundHook = std::function<void(const RoundRecord&, const Policy&)>;

RegretTrace run_episode(const ExperimentConfig& cfg, std::size_t repeat_index,
                        const DatasetSource& source, const RoundHook& hook = {});
RegretTrace run_episode(const ExperimentConfig& cfg, std::size_t repeat_index);

/// Same as run_episode but with a caller-supplied policy (test doubles).
RegretTrace run_episode_with(const ExperimentConfig& cfg, std::size_t repeat_index,
                             const DatasetSource& source, Policy& policy,
                             const RoundHook& hook = {});

struct Summary {
  std::size_t repeats = 0;
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation (n - 1)
  double stderr_ = 0.0;
  std::vector<double> curve_mean;
  std::vector<double> curve_stderr;
};

Summary summarize(std::span<const RegretTrace> traces);

struct GridCell {
  double lambda = 0.0;
  double nu = 0.0;
  double epsilon = 0.0;
  std::vector<RegretTrace> traces;
  Summary summary;
};

struct GridResult {
  std::string algorithm;
  std::vector<GridCell> cells;
  std::size_t best = 0;
};

/// Runs every (lambda, nu, epsilon) cell for all repeats. Empty lists fall
/// back to the scalar in cfg.policy, but at least one list must be set.
GridResult run_grid(const ExperimentConfig& cfg);
/// A single cell with the scalars from cfg.policy.
GridResult run_single(const ExperimentConfig& cfg);

/// Lowest mean; ties go to smaller nu, then smaller lambda, then smaller epsilon.
std::size_t best_cell(const std::vector<GridCell>& cells);

/// Worker count: BANDITBENCH_THREADS if set, else cfg.threads, else the
/// hardware concurrency; never more than `tasks`.
int worker_count(int configured, std::size_t tasks);

/// Writes traces/<algo>_cell<i>_rep<j>.jsonl, summary.csv and plot.csv
/// (best cell of each algorithm) under `dir`.
void emit_outputs(std::span<const GridResult> results, const std::filesystem::path& dir);

void write_trace_jsonl(const RegretTrace& trace, const std::filesystem::path& path);
RegretTrace read_trace_jsonl(const std::filesystem::path& path);

}  // namespace banditbench
