#include "banditbench/posterior.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace banditbench {

PosteriorMode parse_posterior_mode(std::string_view text) {
  if (text == "full") return PosteriorMode::full;
  if (text == "diag" || text == "diagonal") return PosteriorMode::diagonal;
  throw std::invalid_argument("unknown posterior mode '" + std::string(text) +
                              "' (expected diag or full)");
}

std::string_view to_string(PosteriorMode mode) {
  return mode == PosteriorMode::full ? "full" : "diag";
}

DesignMatrix::DesignMatrix(PosteriorMode mode, std::size_t dim, double lambda, double width)
    : mode_(mode), dim_(dim), lambda_(lambda), width_(width) {
  if (dim == 0) throw std::invalid_argument("DesignMatrix: dimension must be positive");
  if (!(lambda > 0.0) || !(width > 0.0)) {
    throw std::invalid_argument("DesignMatrix: lambda and width must be positive");
  }
  const auto n = static_cast<Eigen::Index>(dim);
  log_det_ = static_cast<double>(dim) * std::log(lambda);
  if (mode_ == PosteriorMode::full) {
    inverse_ = Eigen::MatrixXd::Identity(n, n) / lambda;
    matrix_ = Eigen::MatrixXd::Identity(n, n) * lambda;
    scratch_.resize(n);
  } else {
    diag_ = Eigen::VectorXd::Constant(n, lambda);
  }
}

void DesignMatrix::check(const Eigen::Ref<const Eigen::VectorXd>& g) const {
  if (static_cast<std::size_t>(g.size()) != dim_) {
    throw std::invalid_argument("DesignMatrix: feature has length " + std::to_string(g.size()) +
                                ", expected " + std::to_string(dim_));
  }
  if (!g.allFinite()) throw std::invalid_argument("DesignMatrix: non-finite feature");
}

double DesignMatrix::quadratic_form(const Eigen::Ref<const Eigen::VectorXd>& g) const {
  check(g);
  if (mode_ == PosteriorMode::full) {
    return g.dot(inverse_.selfadjointView<Eigen::Lower>() * g);
  }
  return (g.array().square() / diag_.array()).sum();
}

double DesignMatrix::sigma(const Eigen::Ref<const Eigen::VectorXd>& g) const {
  const double q = quadratic_form(g);
  return std::sqrt(std::max(0.0, lambda_ * q / width_));
}

void DesignMatrix::update(const Eigen::Ref<const Eigen::VectorXd>& g) {
  check(g);
  ++updates_;
  if (mode_ == PosteriorMode::diagonal) {
    const Eigen::VectorXd before = diag_;
    diag_.array() += g.array().square() / width_;
    log_det_ += (diag_.array() / before.array()).log().sum();
    return;
  }

  matrix_.noalias() += g * g.transpose() / width_;
  scratch_.noalias() = inverse_ * g;
  const double denom = 1.0 + g.dot(scratch_) / width_;
  if (!(denom > 1.0 - 1e-12) || !std::isfinite(denom)) {
    // U^{-1} lost positive definiteness; start over from U.
    rebuild();
    return;
  }
  inverse_.noalias() -= scratch_ * scratch_.transpose() / (width_ * denom);
  inverse_ = 0.5 * (inverse_ + inverse_.transpose()).eval();
  log_det_ += std::log(denom);
}

void DesignMatrix::rebuild() {
  ++rebuilds_;
  const Eigen::LLT<Eigen::MatrixXd> llt(matrix_);
  if (llt.info() != Eigen::Success) {
    throw std::runtime_error("DesignMatrix: accumulated U is not positive definite");
  }
  const auto n = static_cast<Eigen::Index>(dim_);
  inverse_ = llt.solve(Eigen::MatrixXd::Identity(n, n));
  inverse_ = 0.5 * (inverse_ + inverse_.transpose()).eval();
  log_det_ = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

const Eigen::MatrixXd& DesignMatrix::inverse() const {
  if (mode_ != PosteriorMode::full) {
    throw std::logic_error("DesignMatrix::inverse is only available in full mode");
  }
  return inverse_;
}

const Eigen::MatrixXd& DesignMatrix::matrix() const {
  if (mode_ != PosteriorMode::full) {
    throw std::logic_error("DesignMatrix::matrix is only available in full mode");
  }
  return matrix_;
}

Eigen::VectorXd DesignMatrix::diagonal() const {
  return mode_ == PosteriorMode::full ? Eigen::VectorXd(matrix_.diagonal()) : diag_;
}

}  // namespace banditbench
