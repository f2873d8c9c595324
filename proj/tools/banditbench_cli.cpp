// banditbench command line: run, grid, ntk, ingest.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <Eigen/Eigenvalues>
#include <nlohmann/json.hpp>

#include "banditbench/harness.hpp"
#include "banditbench/ntk.hpp"

namespace bb = banditbench;

namespace {

struct Overrides {
  std::string config_path;
  bb::KeyValueFile flags;
};

// Every flag is recorded as a key-value override so that flags and config
// files share one parser.
void add_flag(CLI::App* app, Overrides& o, const std::string& flag, const std::string& key,
              const std::string& help) {
  app->add_option_function<std::string>(
      flag, [&o, key](const std::string& v) { o.flags.set(key, v); }, help);
}

void add_experiment_flags(CLI::App* app, Overrides& o) {
  app->add_option("--config", o.config_path, "key = value config file (flags win)");
  add_flag(app, o, "--dataset", "dataset",
           "synthetic:cosine|synthetic:linear|csv:<path>|idx:<images>,<labels>");
  add_flag(app, o, "--schema", "schema", "CSV schema file (default <path>.schema)");
  add_flag(app, o, "--T", "T", "horizon");
  add_flag(app, o, "--repeats", "repeats", "episodes per cell");
  add_flag(app, o, "--seed", "seed", "base seed; repeat i uses seed ^ i");
  add_flag(app, o, "--delay", "delay", "reward batch size b (0 = immediate)");
  add_flag(app, o, "--nu", "nu", "exploration scale");
  add_flag(app, o, "--lambda", "lambda", "regularization");
  add_flag(app, o, "--eps", "eps", "epsilon for eps_greedy");
  add_flag(app, o, "--width", "width", "hidden width m");
  add_flag(app, o, "--depth", "depth", "depth L");
  add_flag(app, o, "--iters", "iters", "training iterations per round");
  add_flag(app, o, "--lr", "lr", "training step size");
  add_flag(app, o, "--train-mode", "train-mode", "full|sgd");
  add_flag(app, o, "--batch", "batch", "SGD minibatch size");
  add_flag(app, o, "--stop-train", "stop-train", "stop training after this many rounds (-1 never)");
  add_flag(app, o, "--posterior", "posterior", "diag|full");
  add_flag(app, o, "--gamma", "gamma", "RBF kernel gamma");
  add_flag(app, o, "--bootstrap-networks", "bootstrap-networks", "ensemble size");
  add_flag(app, o, "--bootstrap-inclusion", "bootstrap-inclusion", "inclusion probability");
  add_flag(app, o, "--duplicate-half", "duplicate-half", "true|false|auto");
  add_flag(app, o, "--arms", "arms", "synthetic arm count");
  add_flag(app, o, "--dim", "dim", "synthetic raw dimension");
  add_flag(app, o, "--noise", "noise", "synthetic reward noise");
  add_flag(app, o, "--threads", "threads", "worker threads");
}

bb::ExperimentConfig resolve(const Overrides& o) {
  bb::ExperimentConfig cfg;
  if (!o.config_path.empty()) cfg.apply(bb::KeyValueFile::load(o.config_path));
  cfg.apply(o.flags);
  return cfg;
}

// `algo` may be a comma-separated list; each entry becomes its own config.
std::vector<bb::ExperimentConfig> per_algorithm(const Overrides& o) {
  std::string algos = "neural_ts";
  if (auto v = o.flags.get("algo")) {
    algos = *v;
  } else if (!o.config_path.empty()) {
    if (auto c = bb::KeyValueFile::load(o.config_path).get("algo")) algos = *c;
  }
  std::vector<bb::ExperimentConfig> out;
  for (const std::string& name : bb::split_list(algos)) {
    Overrides single = o;
    single.flags.set("algo", name);
    out.push_back(resolve(single));
  }
  if (out.empty()) throw std::invalid_argument("--algo is empty");
  return out;
}

void print_table(const std::vector<bb::GridResult>& results) {
  for (const bb::GridResult& r : results) {
    for (std::size_t c = 0; c < r.cells.size(); ++c) {
      const bb::GridCell& cell = r.cells[c];
      std::printf("%-12s lambda=%-8g nu=%-8g eps=%-6g regret %10.2f +- %8.2f%s\n",
                  r.algorithm.c_str(), cell.lambda, cell.nu, cell.epsilon, cell.summary.mean,
                  cell.summary.stderr_, c == r.best ? "  *" : "");
    }
  }
}

int cmd_run(const Overrides& o, const std::string& out, bool grid) {
  std::vector<bb::GridResult> results;
  for (bb::ExperimentConfig cfg : per_algorithm(o)) {
    if (grid) {
      const bool user_grid =
          !cfg.grid_lambda.empty() || !cfg.grid_nu.empty() || !cfg.grid_epsilon.empty();
      if (!user_grid) bb::apply_default_grid(cfg);
      results.push_back(bb::run_grid(cfg));
    } else {
      results.push_back(bb::run_single(cfg));
    }
  }
  print_table(results);
  if (!out.empty()) {
    bb::emit_outputs(results, out);
    std::printf("outputs written to %s\n", out.c_str());
  }
  return 0;
}

nlohmann::json matrix_json(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    std::vector<double> row(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index j = 0; j < m.cols(); ++j) row[static_cast<std::size_t>(j)] = m(i, j);
    rows.push_back(std::move(row));
  }
  return rows;
}

struct NtkOptions {
  std::size_t n_max = 2000;
  double R = 0.1;
  double delta = 0.05;
  bool include_matrix = false;
};

int cmd_ntk(const Overrides& o, const NtkOptions& opt, const std::string& out) {
  bb::ExperimentConfig cfg = resolve(o);
  // The kernel is defined on the contexts the network actually sees.
  if (!cfg.duplicate_half.has_value()) cfg.duplicate_half = true;
  const bb::DatasetSource source(cfg);
  auto env = source.open(cfg, cfg.seed);
  const std::size_t rounds = std::min(cfg.horizon, env->capacity());

  std::vector<Eigen::VectorXd> contexts;
  std::vector<double> rewards;
  for (std::size_t t = 0; t < rounds; ++t) {
    bb::Round round = env->next();
    for (std::size_t k = 0; k < round.contexts.size(); ++k) {
      contexts.push_back(std::move(round.contexts[k]));
      rewards.push_back(round.expected[k]);
    }
  }
  const std::size_t total = contexts.size();
  if (total > opt.n_max) {
    // Seeded partial Fisher-Yates picks the subsample.
    std::vector<std::size_t> idx(total);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    bb::Rng rng(bb::mix_seed(cfg.seed, bb::stream::kData));
    for (std::size_t i = 0; i < opt.n_max; ++i) {
      std::swap(idx[i], idx[i + bb::uniform_index(rng, total - i)]);
    }
    idx.resize(opt.n_max);
    std::sort(idx.begin(), idx.end());
    std::vector<Eigen::VectorXd> c;
    std::vector<double> r;
    for (std::size_t i : idx) {
      c.push_back(contexts[i]);
      r.push_back(rewards[i]);
    }
    contexts = std::move(c);
    rewards = std::move(r);
  }

  const int depth = cfg.policy.depth;
  const bb::ntk::NtkMatrix ntk = bb::ntk::ntk_matrix(contexts, depth);
  const double T = static_cast<double>(rounds);
  const double K = static_cast<double>(env->num_arms());
  const double lambda = cfg.policy.lambda;
  const bb::ntk::EffDimReport eff = bb::ntk::effective_dimension(ntk.H, lambda, T * K);
  const double lambda0 = eff.eigenvalues.size() > 0 ? eff.eigenvalues.minCoeff() : 0.0;

  nlohmann::json report{
      {"dataset", cfg.dataset},
      {"n_contexts", contexts.size()},
      {"n_available", total},
      {"depth", depth},
      {"T", rounds},
      {"K", env->num_arms()},
      {"lambda", lambda},
      {"lambda0", lambda0},
      {"effective_dimension", eff.effective_dimension},
      {"log_det", eff.log_det},
      {"spectrum", std::vector<double>(eff.eigenvalues.data(),
                                       eff.eigenvalues.data() + eff.eigenvalues.size())},
      {"R", opt.R},
      {"delta", opt.delta},
  };

  const Eigen::VectorXd h = Eigen::Map<const Eigen::VectorXd>(
      rewards.data(), static_cast<Eigen::Index>(rewards.size()));
  try {
    const double B = bb::ntk::theory_B(h, ntk.H);
    report["B"] = B;
    report["nu_theory"] = bb::ntk::theory_nu(B, opt.R, eff.effective_dimension, T, K, lambda,
                                             opt.delta);
  } catch (const std::exception& e) {
    report["B"] = nullptr;
    report["nu_theory"] = nullptr;
    report["B_error"] = e.what();
  }

  const bb::ntk::WidthCondition wc = bb::ntk::check_width_condition(
      cfg.policy.width, T, K, depth, lambda, std::max(lambda0, 1e-300), opt.delta);
  report["width_condition"] = {
      {"m", cfg.policy.width},
      {"label", wc.label},
      {"C", wc.constant},
      {"first", {{"sqrt_term", wc.first_sqrt_term},
                 {"poly_term", wc.first_poly_term},
                 {"rhs", wc.first_rhs},
                 {"pass", wc.first_pass}}},
      {"second", {{"lhs", wc.second_lhs},
                  {"terms", {wc.second_terms[0], wc.second_terms[1], wc.second_terms[2]}},
                  {"rhs", wc.second_rhs},
                  {"pass", wc.second_pass}}},
  };
  if (opt.include_matrix) report["H"] = matrix_json(ntk.H);

  const std::string text = report.dump(2);
  if (out.empty()) {
    std::cout << text << '\n';
  } else {
    std::ofstream f(out);
    if (!(f << text << '\n')) throw std::runtime_error("cannot write " + out);
  }
  return 0;
}

int cmd_ingest(const Overrides& o, const std::string& out) {
  const bb::ExperimentConfig cfg = resolve(o);
  const bb::DatasetSource source(cfg);
  if (source.synthetic()) throw std::invalid_argument("ingest needs a file dataset");
  bb::data::ContextPipeline pipeline;
  pipeline.duplicate_half = cfg.duplicate_half.value_or(true);
  const nlohmann::json m = bb::data::manifest(*source.dataset(), pipeline);
  if (source.dataset()->dropped_rows > 0) {
    std::fprintf(stderr, "warning: dropped %zu rows with missing values\n",
                 source.dataset()->dropped_rows);
  }
  if (out.empty()) {
    std::cout << m.dump(2) << '\n';
  } else {
    std::ofstream f(out);
    if (!(f << m.dump(2) << '\n')) throw std::runtime_error("cannot write " + out);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Contextual bandit benchmarks: NeuralTS and baselines"};
  app.require_subcommand(1);

  Overrides run_o, grid_o, ntk_o, ingest_o;
  std::string run_out, grid_out, ntk_out, ingest_out;
  NtkOptions ntk_opt;

  CLI::App* run = app.add_subcommand("run", "run one configuration for all repeats");
  add_experiment_flags(run, run_o);
  add_flag(run, run_o, "--algo", "algo", "algorithm, or comma-separated list");
  run->add_option("--out", run_out, "output directory");

  CLI::App* grid = app.add_subcommand("grid", "grid search (default grids per algorithm)");
  add_experiment_flags(grid, grid_o);
  add_flag(grid, grid_o, "--algo", "algo", "algorithm, or comma-separated list");
  add_flag(grid, grid_o, "--grid-lambda", "grid-lambda", "comma-separated lambda values");
  add_flag(grid, grid_o, "--grid-nu", "grid-nu", "comma-separated nu values");
  add_flag(grid, grid_o, "--grid-eps", "grid-eps", "comma-separated epsilon values");
  grid->add_option("--out", grid_out, "output directory");

  CLI::App* ntk = app.add_subcommand("ntk", "NTK spectrum and theory diagnostics (JSON)");
  add_experiment_flags(ntk, ntk_o);
  ntk->add_option("--n-max", ntk_opt.n_max, "context cap; larger sets are subsampled");
  ntk->add_option("--R", ntk_opt.R, "sub-Gaussian noise parameter");
  ntk->add_option("--delta", ntk_opt.delta, "confidence parameter");
  ntk->add_flag("--matrix", ntk_opt.include_matrix, "include H in the report");
  ntk->add_option("--out", ntk_out, "report path (default stdout)");

  CLI::App* ingest = app.add_subcommand("ingest", "build a dataset manifest (JSON)");
  add_experiment_flags(ingest, ingest_o);
  ingest->add_option("--out", ingest_out, "manifest path (default stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(run_o, run_out, false);
    if (grid->parsed()) return cmd_run(grid_o, grid_out, true);
    if (ntk->parsed()) return cmd_ntk(ntk_o, ntk_opt, ntk_out);
    if (ingest->parsed()) return cmd_ingest(ingest_o, ingest_out);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
