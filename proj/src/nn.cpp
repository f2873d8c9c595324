#include "banditbench/nn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace banditbench::nn {

void NetShape::validate() const {
  if (input_dim <= 0 || width <= 0) {
    throw std::invalid_argument("NetShape: input_dim and width must be positive");
  }
  if (input_dim % 2 != 0 || width % 2 != 0) {
    throw std::invalid_argument(
        "NetShape: input_dim and width must be even for block initialization");
  }
  if (depth < 2) {
    throw std::invalid_argument("NetShape: depth must be at least 2");
  }
}

std::size_t NetShape::param_count() const {
  const auto d = static_cast<std::size_t>(input_dim);
  const auto m = static_cast<std::size_t>(width);
  return d * m + m * m * static_cast<std::size_t>(depth - 2) + m;
}

int NetShape::layer_rows(int layer) const { return layer == depth ? 1 : width; }

int NetShape::layer_cols(int layer) const { return layer == 1 ? input_dim : width; }

std::size_t NetShape::layer_offset(int layer) const {
  const auto d = static_cast<std::size_t>(input_dim);
  const auto m = static_cast<std::size_t>(width);
  if (layer <= 1) return 0;
  return d * m + m * m * static_cast<std::size_t>(layer - 2);
}

Params::Params(NetShape shape)
    : shape_(shape), flat_(Vector::Zero(static_cast<Eigen::Index>(shape.param_count()))) {}

Params::Params(NetShape shape, Vector flat) : shape_(shape), flat_(std::move(flat)) {
  if (static_cast<std::size_t>(flat_.size()) != shape_.param_count()) {
    throw std::invalid_argument("Params: flat vector length does not match shape");
  }
}

LayerMap Params::layer(int l) {
  return LayerMap(flat_.data() + shape_.layer_offset(l), shape_.layer_rows(l),
                  shape_.layer_cols(l));
}

ConstLayerMap Params::layer(int l) const {
  return ConstLayerMap(flat_.data() + shape_.layer_offset(l), shape_.layer_rows(l),
                       shape_.layer_cols(l));
}

Params init_params(const NetShape& shape, std::uint64_t seed) {
  shape.validate();
  Params theta(shape);
  Rng rng(seed);
  const int m = shape.width;
  const double hidden_std = std::sqrt(4.0 / m);
  const double output_std = std::sqrt(2.0 / m);

  for (int l = 1; l < shape.depth; ++l) {
    auto w = theta.layer(l);
    const int half_rows = shape.layer_rows(l) / 2;
    const int half_cols = shape.layer_cols(l) / 2;
    for (int i = 0; i < half_rows; ++i) {
      for (int j = 0; j < half_cols; ++j) {
        const double v = hidden_std * standard_normal(rng);
        w(i, j) = v;
        w(i + half_rows, j + half_cols) = v;
      }
    }
  }
  auto last = theta.layer(shape.depth);
  for (int i = 0; i < m / 2; ++i) {
    const double v = output_std * standard_normal(rng);
    last(0, i) = v;
    last(0, i + m / 2) = -v;
  }
  return theta;
}

namespace {

void check_input(const Params& theta, const Eigen::Ref<const Vector>& x) {
  if (x.size() != theta.shape().input_dim) {
    throw std::invalid_argument("network input has length " + std::to_string(x.size()) +
                                ", expected " + std::to_string(theta.shape().input_dim));
  }
}

// Cached activations of one forward pass, reused by the backward pass.
class Tape {
 public:
  explicit Tape(const NetShape& shape)
      : pre_(static_cast<std::size_t>(shape.depth - 1), Vector(shape.width)),
        post_(static_cast<std::size_t>(shape.depth - 1), Vector(shape.width)),
        delta_(shape.width),
        scratch_(shape.width) {
    nonzero_.reserve(static_cast<std::size_t>(shape.input_dim));
  }

  double forward(const Params& theta, const Eigen::Ref<const Vector>& x) {
    const NetShape& s = theta.shape();
    nonzero_.clear();
    for (Eigen::Index j = 0; j < x.size(); ++j) {
      if (x[j] != 0.0) nonzero_.push_back(j);
    }
    auto w1 = theta.layer(1);
    if (2 * nonzero_.size() < static_cast<std::size_t>(x.size())) {
      Vector& h = pre_[0];
      h.setZero();
      for (Eigen::Index j : nonzero_) h.noalias() += w1.col(j) * x[j];
    } else {
      pre_[0].noalias() = w1 * x;
    }
    post_[0] = pre_[0].cwiseMax(0.0);
    for (int l = 2; l < s.depth; ++l) {
      const auto k = static_cast<std::size_t>(l - 1);
      pre_[k].noalias() = theta.layer(l) * post_[k - 1];
      post_[k] = pre_[k].cwiseMax(0.0);
    }
    const double out = theta.layer(s.depth).row(0).dot(post_.back());
    return std::sqrt(static_cast<double>(s.width)) * out;
  }

  // Adds scale * d f / d theta into `out` for the input of the last forward().
  void accumulate(const Params& theta, const Eigen::Ref<const Vector>& x, double scale,
                  Vector& out) {
    const NetShape& s = theta.shape();
    const int depth = s.depth;
    const double top = scale * std::sqrt(static_cast<double>(s.width));

    out.segment(static_cast<Eigen::Index>(s.layer_offset(depth)), s.width) +=
        top * post_.back();
    delta_ = top * theta.layer(depth).row(0).transpose();
    delta_.array() *= (pre_.back().array() > 0.0).cast<double>();

    for (int l = depth - 1; l >= 2; --l) {
      const auto k = static_cast<std::size_t>(l - 1);
      LayerMap g(out.data() + s.layer_offset(l), s.width, s.width);
      g.noalias() += delta_ * post_[k - 1].transpose();
      scratch_.noalias() = theta.layer(l).transpose() * delta_;
      delta_ = scratch_.cwiseProduct((pre_[k - 1].array() > 0.0).cast<double>().matrix());
    }

    LayerMap g1(out.data(), s.width, s.input_dim);
    for (Eigen::Index j : nonzero_) g1.col(j) += delta_ * x[j];
  }

 private:
  std::vector<Vector> pre_;
  std::vector<Vector> post_;
  Vector delta_;
  Vector scratch_;
  std::vector<Eigen::Index> nonzero_;
};

}  // namespace

double forward(const Params& theta, const Eigen::Ref<const Vector>& x) {
  check_input(theta, x);
  Tape tape(theta.shape());
  return tape.forward(theta, x);
}

ValueAndGrad forward_and_grad(const Params& theta, const Eigen::Ref<const Vector>& x) {
  check_input(theta, x);
  Tape tape(theta.shape());
  ValueAndGrad result;
  result.value = tape.forward(theta, x);
  result.grad = Vector::Zero(static_cast<Eigen::Index>(theta.size()));
  tape.accumulate(theta, x, 1.0, result.grad);
  return result;
}

Vector grad(const Params& theta, const Eigen::Ref<const Vector>& x) {
  return forward_and_grad(theta, x).grad;
}

void TrainConfig::validate(int width) const {
  if (!(step_size > 0.0) || !(lambda > 0.0) || iterations <= 0 || batch_size <= 0) {
    throw std::invalid_argument(
        "TrainConfig: step size, lambda, iterations and batch size must be positive");
  }
  if (!(step_size * width * lambda < 1.0)) {
    throw std::invalid_argument("TrainConfig: step_size * width * lambda must be < 1");
  }
}

double regularized_loss(const Params& theta, const Params& anchor,
                        std::span<const Sample> data, double lambda) {
  Tape tape(theta.shape());
  double loss = 0.0;
  for (const Sample& s : data) {
    check_input(theta, s.x);
    const double r = tape.forward(theta, s.x) - s.reward;
    loss += 0.5 * r * r;
  }
  const double m = theta.shape().width;
  loss += 0.5 * m * lambda * (theta.flat() - anchor.flat()).squaredNorm();
  return loss;
}

Params train(const Params& anchor, Params start, std::span<const Sample> data,
             const TrainConfig& cfg, Rng& rng) {
  if (!(anchor.shape() == start.shape())) {
    throw std::invalid_argument("train: anchor and start have different shapes");
  }
  cfg.validate(start.shape().width);
  for (const Sample& s : data) check_input(start, s.x);

  const double m = start.shape().width;
  const std::size_t n = data.size();
  const double n_eff = static_cast<double>(std::max<std::size_t>(n, 1));
  const double reg = m * cfg.lambda / n_eff;

  Tape tape(start.shape());
  Vector gradient(static_cast<Eigen::Index>(start.size()));
  Vector& theta = start.flat();

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::size_t cursor = n;  // forces a shuffle on first minibatch

  for (int iter = 0; iter < cfg.iterations; ++iter) {
    gradient.noalias() = reg * (theta - anchor.flat());
    double data_loss = 0.0;

    if (cfg.mode == TrainMode::full_batch || n == 0) {
      for (const Sample& s : data) {
        const double r = tape.forward(start, s.x) - s.reward;
        data_loss += 0.5 * r * r;
        tape.accumulate(start, s.x, r / n_eff, gradient);
      }
    } else {
      const std::size_t batch = std::min<std::size_t>(static_cast<std::size_t>(cfg.batch_size), n);
      for (std::size_t b = 0; b < batch; ++b) {
        if (cursor >= n) {
          for (std::size_t i = n - 1; i > 0; --i) {
            std::swap(order[i], order[uniform_index(rng, i + 1)]);
          }
          cursor = 0;
        }
        const Sample& s = data[order[cursor++]];
        const double r = tape.forward(start, s.x) - s.reward;
        data_loss += 0.5 * r * r;
        tape.accumulate(start, s.x, r / static_cast<double>(batch), gradient);
      }
    }

    if (!std::isfinite(data_loss)) {
      throw TrainingDiverged("train: non-finite loss at iteration " + std::to_string(iter) +
                             " (step size too large?)");
    }
    theta.noalias() -= cfg.step_size * gradient;
  }

  if (!theta.allFinite()) {
    throw TrainingDiverged("train: parameters became non-finite (step size too large?)");
  }
  return start;
}

}  // namespace banditbench::nn
