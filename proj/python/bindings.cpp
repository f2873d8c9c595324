#include <string>
#include <vector>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "banditbench/data.hpp"
#include "banditbench/harness.hpp"
#include "banditbench/nn.hpp"
#include "banditbench/ntk.hpp"
#include "banditbench/posterior.hpp"

namespace py = pybind11;
namespace bb = banditbench;
using namespace pybind11::literals;

namespace {

// Config values arrive as a plain dict and go through the same key-value
// parser as config files and CLI flags.
bb::ExperimentConfig config_from_dict(const py::dict& d) {
  bb::KeyValueFile kv;
  for (const auto& [k, v] : d) {
    std::string value;
    if (py::isinstance<py::bool_>(v)) {
      value = v.cast<bool>() ? "true" : "false";
    } else if (py::isinstance<py::list>(v) || py::isinstance<py::tuple>(v)) {
      for (const auto& item : v) {
        if (!value.empty()) value += ",";
        value += py::str(item).cast<std::string>();
      }
    } else {
      value = py::str(v).cast<std::string>();
    }
    kv.set(k.cast<std::string>(), value);
  }
  bb::ExperimentConfig cfg;
  cfg.apply(kv);
  return cfg;
}

py::dict trace_to_dict(const bb::RegretTrace& trace) {
  std::vector<std::size_t> arms;
  std::vector<double> rewards, regrets, cumulative, sigmas;
  for (const bb::RoundRecord& r : trace.rounds) {
    arms.push_back(r.arm);
    rewards.push_back(r.reward);
    regrets.push_back(r.regret);
    cumulative.push_back(r.cumulative);
    sigmas.push_back(r.sigma);
  }
  return py::dict("algorithm"_a = trace.algorithm, "repeat"_a = trace.repeat,
                  "seed"_a = trace.seed, "arm"_a = arms, "reward"_a = rewards,
                  "regret"_a = regrets, "cumulative"_a = cumulative, "sigma"_a = sigmas,
                  "total_regret"_a = trace.total_regret());
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Contextual bandit core: networks, posteriors, NTK diagnostics, harness";

  py::class_<bb::nn::NetShape>(m, "NetShape")
      .def(py::init([](int d, int width, int depth) {
             bb::nn::NetShape s{d, width, depth};
             s.validate();
             return s;
           }),
           "input_dim"_a, "width"_a, "depth"_a = 2)
      .def_readonly("input_dim", &bb::nn::NetShape::input_dim)
      .def_readonly("width", &bb::nn::NetShape::width)
      .def_readonly("depth", &bb::nn::NetShape::depth)
      .def_property_readonly("param_count", &bb::nn::NetShape::param_count);

  m.def(
      "init_params",
      [](const bb::nn::NetShape& shape, std::uint64_t seed) {
        return bb::nn::init_params(shape, seed).flat();
      },
      "shape"_a, "seed"_a, "Flat block-initialized parameter vector.");
  m.def(
      "forward",
      [](const bb::nn::NetShape& shape, const Eigen::VectorXd& theta, const Eigen::VectorXd& x) {
        return bb::nn::forward(bb::nn::Params(shape, theta), x);
      },
      "shape"_a, "theta"_a, "x"_a);
  m.def(
      "grad",
      [](const bb::nn::NetShape& shape, const Eigen::VectorXd& theta, const Eigen::VectorXd& x) {
        return bb::nn::grad(bb::nn::Params(shape, theta), x);
      },
      "shape"_a, "theta"_a, "x"_a);

  py::class_<bb::DesignMatrix>(m, "DesignMatrix")
      .def(py::init([](const std::string& mode, std::size_t dim, double lambda, double width) {
             return bb::DesignMatrix(bb::parse_posterior_mode(mode), dim, lambda, width);
           }),
           "mode"_a, "dim"_a, "lam"_a, "width"_a)
      .def("sigma", &bb::DesignMatrix::sigma, "g"_a)
      .def("update", &bb::DesignMatrix::update, "g"_a)
      .def_property_readonly("log_det", &bb::DesignMatrix::log_det)
      .def_property_readonly("diagonal", &bb::DesignMatrix::diagonal);

  m.def(
      "ntk_matrix",
      [](const Eigen::MatrixXd& rows, int depth) {
        std::vector<Eigen::VectorXd> contexts;
        for (Eigen::Index i = 0; i < rows.rows(); ++i) contexts.push_back(rows.row(i).transpose());
        return bb::ntk::ntk_matrix(contexts, depth).H;
      },
      "contexts"_a, "depth"_a, "NTK matrix of unit-norm contexts given as rows.");
  m.def(
      "effective_dimension",
      [](const Eigen::MatrixXd& H, double lambda, double tk) {
        return bb::ntk::effective_dimension(H, lambda, tk).effective_dimension;
      },
      "H"_a, "lam"_a, "tk"_a);
  m.def("theory_nu", &bb::ntk::theory_nu, "B"_a, "R"_a, "d_tilde"_a, "T"_a, "K"_a, "lam"_a,
        "delta"_a);
  m.def("theory_B", &bb::ntk::theory_B, "h"_a, "H"_a);

  m.def(
      "normalize_unit", [](const Eigen::VectorXd& x) { return bb::data::normalize_unit(x); },
      "x"_a);
  m.def(
      "duplicate_half", [](const Eigen::VectorXd& x) { return bb::data::duplicate_half(x); },
      "x"_a);
  m.def(
      "disjoint_encode",
      [](const Eigen::VectorXd& x, int k) { return bb::data::disjoint_encode(x, k); }, "x"_a,
      "num_arms"_a);

  m.def(
      "run_episode",
      [](const py::dict& config, std::size_t repeat) {
        const bb::ExperimentConfig cfg = config_from_dict(config);
        bb::RegretTrace trace;
        {
          py::gil_scoped_release release;
          trace = bb::run_episode(cfg, repeat);
        }
        return trace_to_dict(trace);
      },
      "config"_a, "repeat"_a = 0,
      "Runs one episode. Keys match the CLI flags without dashes, e.g. "
      "{'algo': 'neural_ts', 'T': 500}.");
  m.def(
      "run_grid",
      [](const py::dict& config, bool default_grid) {
        bb::ExperimentConfig cfg = config_from_dict(config);
        if (default_grid) bb::apply_default_grid(cfg);
        bb::GridResult result;
        {
          py::gil_scoped_release release;
          result = bb::run_grid(cfg);
        }
        py::list cells;
        for (const bb::GridCell& c : result.cells) {
          cells.append(py::dict("lambda"_a = c.lambda, "nu"_a = c.nu, "epsilon"_a = c.epsilon,
                                "mean"_a = c.summary.mean, "std"_a = c.summary.stddev,
                                "stderr"_a = c.summary.stderr_));
        }
        return py::dict("algorithm"_a = result.algorithm, "cells"_a = cells,
                        "best"_a = result.best);
      },
      "config"_a, "default_grid"_a = false);
}
