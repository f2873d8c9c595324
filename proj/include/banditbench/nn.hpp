#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "banditbench/rng.hpp"

namespace banditbench {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

namespace nn {

using RowMajorMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using LayerMap = Eigen::Map<RowMajorMatrix>;
using ConstLayerMap = Eigen::Map<const RowMajorMatrix>;

/// Architecture of the fully connected ReLU network f(x) = sqrt(m) * f_L.
///
/// Layer 1 is width x input_dim, layers 2..L-1 are width x width and the
/// output layer is 1 x width. Both dimensions must be even because the
/// initializer builds 2x2 block-diagonal weights.
struct NetShape {
  int input_dim = 0;
  int width = 0;
  int depth = 2;

  void validate() const;
  std::size_t param_count() const;
  int layer_rows(int layer) const;
  int layer_cols(int layer) const;
  /// Offset of layer `layer` (1-based) inside the flat parameter vector.
  std::size_t layer_offset(int layer) const;

  friend bool operator==(const NetShape&, const NetShape&) = default;
};

/// Flat parameter vector theta = (vec(W_1); ...; vec(W_L)), layer-major and
/// row-major within a layer. Gradient features use the same ordering.
class Params {
 public:
  Params() = default;
  explicit Params(NetShape shape);
  Params(NetShape shape, Vector flat);

  const NetShape& shape() const { return shape_; }
  const Vector& flat() const { return flat_; }
  Vector& flat() { return flat_; }
  std::size_t size() const { return static_cast<std::size_t>(flat_.size()); }

  LayerMap layer(int l);
  ConstLayerMap layer(int l) const;

 private:
  NetShape shape_;
  Vector flat_;
};

/// Block initialization: W_l = (W, 0; 0, W) with W ~ N(0, 4/m) for l < L and
/// W_L = (w^T, -w^T) with w ~ N(0, 2/m). Deterministic in `seed`.
Params init_params(const NetShape& shape, std::uint64_t seed);

double forward(const Params& theta, const Eigen::Ref<const Vector>& x);

/// Gradient of forward() with respect to every weight; the 1/sqrt(m) factor
/// used by the posterior is not applied here.
Vector grad(const Params& theta, const Eigen::Ref<const Vector>& x);

struct ValueAndGrad {
  double value = 0.0;
  Vector grad;
};
ValueAndGrad forward_and_grad(const Params& theta,
                              const Eigen::Ref<const Vector>& x);

enum class TrainMode { full_batch, minibatch_sgd };

struct TrainConfig {
  double step_size = 1e-3;
  int iterations = 100;
  double lambda = 1.0;
  TrainMode mode = TrainMode::full_batch;
  int batch_size = 32;

  /// Throws std::invalid_argument unless every field is positive and
  /// step_size * width * lambda < 1.
  void validate(int width) const;
};

struct Sample {
  Vector x;
  double reward = 0.0;
};

/// L(theta) = sum_i (f(x_i) - r_i)^2 / 2 + m * lambda * ||theta - anchor||^2 / 2.
double regularized_loss(const Params& theta, const Params& anchor,
                        std::span<const Sample> data, double lambda);

class TrainingDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Runs cfg.iterations steps of gradient descent on regularized_loss()
/// starting from `start`. Each step moves along -step_size * grad(L) / n
/// (n = max(1, data size)), which has the same minimizer as L and keeps the
/// step size meaningful as the history grows. Minibatch mode replaces the
/// data term with an unbiased minibatch estimate; `rng` is only read there.
Params train(const Params& anchor, Params start, std::span<const Sample> data,
             const TrainConfig& cfg, Rng& rng);

}  // namespace nn
}  // namespace banditbench
