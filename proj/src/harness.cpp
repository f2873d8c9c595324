#include "banditbench/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <thread>

#include <nlohmann/json.hpp>

namespace banditbench {

namespace {

double to_double(const std::string& key, const std::string& value) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw std::invalid_argument("config: '" + key + "' expects a number, got '" + value + "'");
  }
  return v;
}

long to_long(const std::string& key, const std::string& value) {
  if (value == "inf" || value == "never") return kTrainForever;
  long v = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw std::invalid_argument("config: '" + key + "' expects an integer, got '" + value + "'");
  }
  return v;
}

std::uint64_t to_u64(const std::string& key, const std::string& value) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw std::invalid_argument("config: '" + key + "' expects an unsigned integer");
  }
  return v;
}

bool to_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
  if (value == "false" || value == "0" || value == "no" || value == "off") return false;
  throw std::invalid_argument("config: '" + key + "' expects a boolean");
}

std::vector<double> to_list(const std::string& key, const std::string& value) {
  std::vector<double> out;
  for (const std::string& item : split_list(value)) out.push_back(to_double(key, item));
  if (out.empty()) throw std::invalid_argument("config: '" + key + "' is an empty grid");
  return out;
}

}  // namespace

void ExperimentConfig::validate() const {
  policy.validate();
  if (repeats < 1) throw std::invalid_argument("config: repeats must be >= 1");
  if (horizon < 1) throw std::invalid_argument("config: horizon must be >= 1");
}

bool ExperimentConfig::use_duplicate_half() const {
  if (duplicate_half.has_value()) return *duplicate_half;
  return policy.algorithm == Algorithm::neural_ts || policy.algorithm == Algorithm::neural_ucb;
}

void ExperimentConfig::apply(const KeyValueFile& kv) {
  for (const auto& [key, value] : kv.entries()) {
    if (key == "dataset") {
      dataset = value;
    } else if (key == "schema") {
      schema = value;
    } else if (key == "algo") {
      policy.algorithm = parse_algorithm(value);
    } else if (key == "T") {
      horizon = static_cast<std::size_t>(to_long(key, value));
    } else if (key == "repeats") {
      repeats = static_cast<int>(to_long(key, value));
    } else if (key == "seed") {
      seed = to_u64(key, value);
    } else if (key == "delay") {
      delay = static_cast<std::size_t>(to_long(key, value));
    } else if (key == "nu") {
      policy.nu = to_double(key, value);
    } else if (key == "lambda") {
      policy.lambda = to_double(key, value);
    } else if (key == "eps") {
      policy.epsilon = to_double(key, value);
    } else if (key == "width") {
      policy.width = static_cast<int>(to_long(key, value));
    } else if (key == "depth") {
      policy.depth = static_cast<int>(to_long(key, value));
    } else if (key == "iters") {
      policy.train.iterations = static_cast<int>(to_long(key, value));
    } else if (key == "lr") {
      policy.train.step_size = to_double(key, value);
    } else if (key == "train-mode") {
      if (value == "full") {
        policy.train.mode = nn::TrainMode::full_batch;
      } else if (value == "sgd") {
        policy.train.mode = nn::TrainMode::minibatch_sgd;
      } else {
        throw std::invalid_argument("config: train-mode must be full or sgd");
      }
    } else if (key == "batch") {
      policy.train.batch_size = static_cast<int>(to_long(key, value));
    } else if (key == "stop-train") {
      policy.stop_train = to_long(key, value);
    } else if (key == "warm-start") {
      policy.warm_start = to_bool(key, value);
    } else if (key == "posterior") {
      policy.posterior = parse_posterior_mode(value);
    } else if (key == "gamma") {
      policy.kernel_gamma = to_double(key, value);
    } else if (key == "bootstrap-networks") {
      policy.bootstrap_networks = static_cast<int>(to_long(key, value));
    } else if (key == "bootstrap-inclusion") {
      policy.bootstrap_inclusion = to_double(key, value);
    } else if (key == "duplicate-half") {
      if (value == "auto") {
        duplicate_half.reset();
      } else {
        duplicate_half = to_bool(key, value);
      }
    } else if (key == "grid-lambda") {
      grid_lambda = to_list(key, value);
    } else if (key == "grid-nu") {
      grid_nu = to_list(key, value);
    } else if (key == "grid-eps") {
      grid_epsilon = to_list(key, value);
    } else if (key == "threads") {
      threads = static_cast<int>(to_long(key, value));
    } else if (key == "arms") {
      synthetic.num_arms = static_cast<int>(to_long(key, value));
    } else if (key == "dim") {
      synthetic.raw_dim = static_cast<int>(to_long(key, value));
    } else if (key == "noise") {
      synthetic.noise = to_double(key, value);
    } else {
      throw std::invalid_argument("config: unknown key '" + key + "'");
    }
  }
}

void apply_default_grid(ExperimentConfig& cfg) {
  switch (cfg.policy.algorithm) {
    case Algorithm::neural_ts:
    case Algorithm::neural_ucb:
      cfg.grid_lambda = {1.0, 1e-1, 1e-2, 1e-3};
      cfg.grid_nu = {1e-1, 1e-2, 1e-3, 1e-4, 1e-5};
      break;
    case Algorithm::lin_ts:
    case Algorithm::lin_ucb:
    case Algorithm::kernel_ts:
    case Algorithm::kernel_ucb:
      cfg.grid_lambda = {1.0};
      cfg.grid_nu = {1.0, 0.1, 0.01};
      break;
    case Algorithm::eps_greedy:
      cfg.grid_epsilon = {0.01, 0.05, 0.1};
      break;
    case Algorithm::bootstrap_nn:
    case Algorithm::uniform:
      cfg.grid_lambda = {cfg.policy.lambda};
      break;
  }
}

// ---------------------------------------------------------------------------

DatasetSource::DatasetSource(const ExperimentConfig& cfg) {
  const std::string& ref = cfg.dataset;
  if (ref.starts_with("synthetic:")) {
    const std::string kind = ref.substr(10);
    if (kind != "cosine" && kind != "linear") {
      throw std::invalid_argument("unknown synthetic dataset '" + kind + "'");
    }
    return;
  }
  if (ref.starts_with("idx:")) {
    const auto parts = split_list(ref.substr(4));
    if (parts.size() != 2) throw std::invalid_argument("idx dataset needs images,labels");
    dataset_ = std::make_shared<data::LabeledDataset>(data::ingest_idx(parts[0], parts[1]));
    return;
  }
  const std::string path = ref.starts_with("csv:") ? ref.substr(4) : ref;
  const std::string schema = cfg.schema.empty() ? path + ".schema" : cfg.schema;
  dataset_ = std::make_shared<data::LabeledDataset>(
      data::ingest_csv(path, data::CsvSchema::load(schema)));
}

std::unique_ptr<Environment> DatasetSource::open(const ExperimentConfig& cfg,
                                                 std::uint64_t seed) const {
  if (dataset_ == nullptr) {
    SyntheticSpec spec = cfg.synthetic;
    spec.reward = cfg.dataset == "synthetic:linear" ? SyntheticReward::linear
                                                    : SyntheticReward::cosine;
    return std::make_unique<SyntheticEnvironment>(spec, cfg.use_duplicate_half(), seed);
  }
  data::ContextPipeline pipeline;
  pipeline.duplicate_half = cfg.use_duplicate_half();
  return std::make_unique<ClassificationEnvironment>(dataset_, pipeline,
                                                     mix_seed(seed, stream::kData));
}

// ---------------------------------------------------------------------------

RegretTrace run_episode_with(const ExperimentConfig& cfg, std::size_t repeat_index,
                             const DatasetSource& source, Policy& policy,
                             const RoundHook& hook) {
  const std::uint64_t seed = cfg.repeat_seed(repeat_index);
  const std::unique_ptr<Environment> env = source.open(cfg, seed);
  if (cfg.horizon > env->capacity()) {
    throw std::out_of_range("dataset exhausted: horizon " + std::to_string(cfg.horizon) +
                            " exceeds " + std::to_string(env->capacity()) + " rounds");
  }

  RegretTrace trace;
  trace.algorithm = std::string(policy.name());
  trace.repeat = repeat_index;
  trace.seed = seed;
  trace.delay = cfg.delay;
  trace.lambda = cfg.policy.lambda;
  trace.nu = cfg.policy.nu;
  trace.epsilon = cfg.policy.epsilon;
  trace.rounds.reserve(cfg.horizon);

  Rng select_rng(mix_seed(seed, stream::kSelect));
  const std::size_t flush_every = std::max<std::size_t>(cfg.delay, 1);
  std::vector<std::pair<Context, double>> pending;
  double cumulative = 0.0;

  for (std::size_t t = 1; t <= cfg.horizon; ++t) {
    const Round round = env->next();
    const auto start = std::chrono::steady_clock::now();

    const Decision decision = policy.select(round.contexts, select_rng);
    const std::size_t arm = decision.arm;
    RoundRecord rec;
    rec.t = t;
    rec.arm = arm;
    rec.reward = round.realized[arm];
    rec.optimal = *std::max_element(round.expected.begin(), round.expected.end());
    rec.regret = rec.optimal - round.expected[arm];
    cumulative += rec.regret;
    rec.cumulative = cumulative;
    rec.sigma = decision.sigmas.empty() ? 0.0 : decision.sigmas[arm];

    pending.emplace_back(round.contexts[arm], rec.reward);
    if (t % flush_every == 0 || t == cfg.horizon) {
      for (const auto& [context, reward] : pending) policy.observe(context, reward);
      pending.clear();
      rec.flushed = true;
    }
    rec.wall_us = std::chrono::duration_cast<std::chrono::microseconds>(
                      std::chrono::steady_clock::now() - start)
                      .count();
    trace.rounds.push_back(rec);
    if (hook) hook(rec, policy);
  }
  return trace;
}

RegretTrace run_episode(const ExperimentConfig& cfg, std::size_t repeat_index,
                        const DatasetSource& source, const RoundHook& hook) {
  cfg.validate();
  const std::uint64_t seed = cfg.repeat_seed(repeat_index);
  // Context dimension is only known once an environment exists.
  const int dim = source.open(cfg, seed)->context_dim();
  const std::unique_ptr<Policy> policy = make_policy(cfg.policy, dim, seed);
  return run_episode_with(cfg, repeat_index, source, *policy, hook);
}

RegretTrace run_episode(const ExperimentConfig& cfg, std::size_t repeat_index) {
  const DatasetSource source(cfg);
  return run_episode(cfg, repeat_index, source);
}

// ---------------------------------------------------------------------------

Summary summarize(std::span<const RegretTrace> traces) {
  if (traces.empty()) throw std::invalid_argument("summarize: no traces");
  const std::size_t n = traces.size();
  const std::size_t len = traces.front().rounds.size();
  for (const RegretTrace& t : traces) {
    if (t.rounds.size() != len) throw std::invalid_argument("summarize: ragged traces");
  }
  auto mean_std = [n](auto&& value_of) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += value_of(i);
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) ss += (value_of(i) - mean) * (value_of(i) - mean);
    const double sd = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;
    return std::pair{mean, sd};
  };

  Summary s;
  s.repeats = n;
  const auto [mean, sd] = mean_std([&](std::size_t i) { return traces[i].total_regret(); });
  s.mean = mean;
  s.stddev = sd;
  s.stderr_ = sd / std::sqrt(static_cast<double>(n));
  s.curve_mean.resize(len);
  s.curve_stderr.resize(len);
  for (std::size_t r = 0; r < len; ++r) {
    const auto [m, d] = mean_std([&](std::size_t i) { return traces[i].rounds[r].cumulative; });
    s.curve_mean[r] = m;
    s.curve_stderr[r] = d / std::sqrt(static_cast<double>(n));
  }
  return s;
}

std::size_t best_cell(const std::vector<GridCell>& cells) {
  if (cells.empty()) throw std::invalid_argument("best_cell: empty grid");
  auto key = [](const GridCell& c) {
    return std::tuple{c.summary.mean, c.nu, c.lambda, c.epsilon};
  };
  std::size_t best = 0;
  for (std::size_t i = 1; i < cells.size(); ++i) {
    if (key(cells[i]) < key(cells[best])) best = i;
  }
  return best;
}

int worker_count(int configured, std::size_t tasks) {
  int n = configured;
  if (const char* env = std::getenv("BANDITBENCH_THREADS"); env != nullptr && *env != '\0') {
    n = std::atoi(env);
  }
  if (n <= 0) n = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  return static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(n),
                                                std::max<std::size_t>(tasks, 1)));
}

namespace {

GridResult run_cells(const ExperimentConfig& cfg, std::vector<GridCell> cells) {
  const DatasetSource source(cfg);
  const std::size_t repeats = static_cast<std::size_t>(cfg.repeats);
  const std::size_t tasks = cells.size() * repeats;

  std::vector<ExperimentConfig> cell_cfgs;
  for (GridCell& cell : cells) {
    ExperimentConfig c = cfg;
    c.policy.lambda = cell.lambda;
    c.policy.nu = cell.nu;
    c.policy.epsilon = cell.epsilon;
    c.validate();
    cell_cfgs.push_back(std::move(c));
    cell.traces.resize(repeats);
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t task = next++; task < tasks; task = next++) {
      const std::size_t c = task / repeats;
      const std::size_t r = task % repeats;
      try {
        cells[c].traces[r] = run_episode(cell_cfgs[c], r, source);
      } catch (...) {
        const std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const int workers = worker_count(cfg.threads, tasks);
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int i = 0; i < workers; ++i) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  GridResult result;
  result.algorithm = std::string(to_string(cfg.policy.algorithm));
  for (GridCell& cell : cells) cell.summary = summarize(cell.traces);
  result.cells = std::move(cells);
  result.best = best_cell(result.cells);
  return result;
}

}  // namespace

GridResult run_grid(const ExperimentConfig& cfg) {
  if (cfg.grid_lambda.empty() && cfg.grid_nu.empty() && cfg.grid_epsilon.empty()) {
    throw std::invalid_argument("run_grid: empty grid");
  }
  const std::vector<double> lambdas =
      cfg.grid_lambda.empty() ? std::vector<double>{cfg.policy.lambda} : cfg.grid_lambda;
  const std::vector<double> nus =
      cfg.grid_nu.empty() ? std::vector<double>{cfg.policy.nu} : cfg.grid_nu;
  const std::vector<double> epsilons =
      cfg.grid_epsilon.empty() ? std::vector<double>{cfg.policy.epsilon} : cfg.grid_epsilon;

  std::vector<GridCell> cells;
  for (double lambda : lambdas) {
    for (double nu : nus) {
      for (double eps : epsilons) cells.push_back(GridCell{lambda, nu, eps, {}, {}});
    }
  }
  return run_cells(cfg, std::move(cells));
}

GridResult run_single(const ExperimentConfig& cfg) {
  return run_cells(cfg, {GridCell{cfg.policy.lambda, cfg.policy.nu, cfg.policy.epsilon, {}, {}}});
}

// ---------------------------------------------------------------------------

void write_trace_jsonl(const RegretTrace& trace, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  const nlohmann::json header{
      {"type", "episode"},      {"algorithm", trace.algorithm}, {"repeat", trace.repeat},
      {"seed", trace.seed},     {"delay", trace.delay},         {"lambda", trace.lambda},
      {"nu", trace.nu},         {"epsilon", trace.epsilon},     {"rounds", trace.rounds.size()},
  };
  out << header.dump() << '\n';
  for (const RoundRecord& r : trace.rounds) {
    const nlohmann::json line{
        {"t", r.t},
        {"arm", r.arm},
        {"reward", r.reward},
        {"optimal", r.optimal},
        {"regret", r.regret},
        {"cumulative", r.cumulative},
        {"sigma", r.sigma},
        {"flushed", r.flushed},
        {"wall_us", r.wall_us},
    };
    out << line.dump() << '\n';
  }
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

RegretTrace read_trace_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  RegretTrace trace;
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path.string() + ": empty trace");
  const auto header = nlohmann::json::parse(line);
  trace.algorithm = header.at("algorithm").get<std::string>();
  trace.repeat = header.at("repeat").get<std::size_t>();
  trace.seed = header.at("seed").get<std::uint64_t>();
  trace.delay = header.at("delay").get<std::size_t>();
  trace.lambda = header.at("lambda").get<double>();
  trace.nu = header.at("nu").get<double>();
  trace.epsilon = header.at("epsilon").get<double>();
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto j = nlohmann::json::parse(line);
    RoundRecord r;
    r.t = j.at("t").get<std::size_t>();
    r.arm = j.at("arm").get<std::size_t>();
    r.reward = j.at("reward").get<double>();
    r.optimal = j.at("optimal").get<double>();
    r.regret = j.at("regret").get<double>();
    r.cumulative = j.at("cumulative").get<double>();
    r.sigma = j.at("sigma").get<double>();
    r.flushed = j.at("flushed").get<bool>();
    r.wall_us = j.at("wall_us").get<std::int64_t>();
    trace.rounds.push_back(r);
  }
  return trace;
}

void emit_outputs(std::span<const GridResult> results, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir / "traces", ec);
  if (ec) throw std::runtime_error("cannot create " + (dir / "traces").string());

  std::ofstream summary(dir / "summary.csv");
  std::ofstream plot(dir / "plot.csv");
  if (!summary || !plot) throw std::runtime_error("cannot write outputs under " + dir.string());
  summary.precision(17);
  plot.precision(17);
  summary << "algorithm,cell,lambda,nu,epsilon,repeats,mean_regret,std_regret,stderr_regret,"
             "best\n";
  plot << "algorithm,t,mean_cumulative_regret,stderr\n";

  for (const GridResult& result : results) {
    for (std::size_t c = 0; c < result.cells.size(); ++c) {
      const GridCell& cell = result.cells[c];
      for (const RegretTrace& trace : cell.traces) {
        write_trace_jsonl(trace, dir / "traces" /
                                     (result.algorithm + "_cell" + std::to_string(c) + "_rep" +
                                      std::to_string(trace.repeat) + ".jsonl"));
      }
      summary << result.algorithm << ',' << c << ',' << cell.lambda << ',' << cell.nu << ','
              << cell.epsilon << ',' << cell.summary.repeats << ',' << cell.summary.mean << ','
              << cell.summary.stddev << ',' << cell.summary.stderr_ << ','
              << (c == result.best ? 1 : 0) << '\n';
    }
    const Summary& best = result.cells[result.best].summary;
    for (std::size_t t = 0; t < best.curve_mean.size(); ++t) {
      plot << result.algorithm << ',' << (t + 1) << ',' << best.curve_mean[t] << ','
           << best.curve_stderr[t] << '\n';
    }
  }
  if (!summary || !plot) throw std::runtime_error("write failed under " + dir.string());
}

}  // namespace banditbench
