#include "banditbench/ntk.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace banditbench::ntk {

namespace {

constexpr double kPi = std::numbers::pi;

// Angle between the two coordinates of the covariance [[a, b], [b, c]];
// cos is clamped because identical contexts drift just past 1.
double angle(double a, double b, double c) {
  const double cosine = std::clamp(b / std::sqrt(a * c), -1.0, 1.0);
  return std::acos(cosine);
}

Eigen::VectorXd descending_eigenvalues(const Eigen::MatrixXd& H) {
  if (H.rows() != H.cols()) throw std::invalid_argument("matrix must be square");
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(H, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("eigendecomposition failed");
  }
  return solver.eigenvalues().reverse();
}

}  // namespace

double relu_moment(double a, double b, double c) {
  if (a <= 0.0 || c <= 0.0) return 0.0;
  const double theta = angle(a, b, c);
  return std::sqrt(a * c) / kPi * (std::sin(theta) + (kPi - theta) * std::cos(theta));
}

double step_moment(double a, double b, double c) {
  if (a <= 0.0 || c <= 0.0) return 1.0;
  return (kPi - angle(a, b, c)) / kPi;
}

NtkMatrix ntk_matrix(std::span<const Eigen::VectorXd> contexts, int depth) {
  if (contexts.empty()) throw std::invalid_argument("ntk_matrix: empty context set");
  if (depth < 2) throw std::invalid_argument("ntk_matrix: depth must be at least 2");
  const auto n = static_cast<Eigen::Index>(contexts.size());
  const Eigen::Index dim = contexts.front().size();

  Eigen::MatrixXd X(n, dim);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::VectorXd& x = contexts[static_cast<std::size_t>(i)];
    if (x.size() != dim) throw std::invalid_argument("ntk_matrix: ragged context set");
    if (std::abs(x.norm() - 1.0) > 1e-9) {
      throw std::invalid_argument("ntk_matrix: contexts must have unit norm");
    }
    X.row(i) = x.transpose();
  }

  NtkMatrix out;
  out.depth = depth;
  Eigen::MatrixXd sigma = X * X.transpose();
  Eigen::MatrixXd h_tilde = sigma;
  out.sigma.push_back(sigma);
  out.h_tilde.push_back(h_tilde);

  for (int level = 1; level < depth; ++level) {
    Eigen::MatrixXd next_sigma(n, n);
    Eigen::MatrixXd next_h(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j <= i; ++j) {
        const double a = sigma(i, i), b = sigma(i, j), c = sigma(j, j);
        const double s = relu_moment(a, b, c);
        const double h = h_tilde(i, j) * step_moment(a, b, c) + s;
        next_sigma(i, j) = next_sigma(j, i) = s;
        next_h(i, j) = next_h(j, i) = h;
      }
    }
    sigma = std::move(next_sigma);
    h_tilde = std::move(next_h);
    out.sigma.push_back(sigma);
    out.h_tilde.push_back(h_tilde);
  }
  out.H = 0.5 * (h_tilde + sigma);
  return out;
}

EffDimReport effective_dimension(const Eigen::MatrixXd& H, double lambda, double tk) {
  if (!(lambda > 0.0)) throw std::invalid_argument("effective_dimension: lambda must be > 0");
  if (!(tk >= 1.0)) throw std::invalid_argument("effective_dimension: TK must be >= 1");
  EffDimReport report;
  report.lambda = lambda;
  report.tk = tk;
  report.eigenvalues = descending_eigenvalues(H);
  const double scale = report.eigenvalues.cwiseAbs().maxCoeff();
  if (report.eigenvalues.minCoeff() < -1e-8 * scale) {
    throw std::invalid_argument("effective_dimension: H is not positive semidefinite");
  }
  for (double ev : report.eigenvalues) {
    report.log_det += std::log1p(std::max(ev, 0.0) / lambda);
  }
  report.effective_dimension = report.log_det / std::log1p(tk / lambda);
  return report;
}

TruncationBound effdim_truncation_bound(const Eigen::MatrixXd& H, int d_prime, double tk) {
  const Eigen::VectorXd ev = descending_eigenvalues(H);
  if (d_prime < 0 || d_prime > ev.size()) {
    throw std::out_of_range("effdim_truncation_bound: d' outside [0, n]");
  }
  TruncationBound out;
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (i < d_prime) {
      out.head += ev[i];
    } else {
      out.tail += ev[i];
      if (ev[i] > 1.0 / tk) out.tail_hypothesis = false;
    }
  }
  out.bound = out.head + out.tail;
  const EffDimReport dim = effective_dimension(H, 1.0, tk);
  out.log_det = dim.log_det;
  out.effective_dimension = dim.effective_dimension;
  return out;
}

double theory_nu(double B, double R, double d_tilde, double T, double K, double lambda,
                 double delta) {
  if (!(lambda > 0.0) || !(delta > 0.0 && delta < 1.0) || R < 0.0 || d_tilde < 0.0) {
    throw std::invalid_argument("theory_nu: invalid arguments");
  }
  const double inner =
      d_tilde * std::log1p(T * K / lambda) + 2.0 + 2.0 * std::log(1.0 / delta);
  return B + R * std::sqrt(inner);
}

double theory_B_floor() { return 1.0 / (22.0 * std::numbers::e * std::sqrt(kPi)); }

double theory_B(const Eigen::VectorXd& h, const Eigen::MatrixXd& H) {
  if (H.rows() != h.size() || H.cols() != h.size()) {
    throw std::invalid_argument("theory_B: dimension mismatch");
  }
  const Eigen::VectorXd ev = descending_eigenvalues(H);
  if (!(ev.minCoeff() > 1e-10)) throw std::invalid_argument("theory_B: H is singular");
  const Eigen::LLT<Eigen::MatrixXd> llt(H);
  if (llt.info() != Eigen::Success) throw std::invalid_argument("theory_B: H is singular");
  const double quad = h.dot(llt.solve(h));
  return std::max(theory_B_floor(), std::sqrt(2.0 * std::max(quad, 0.0)));
}

WidthCondition check_width_condition(double m, double T, double K, double L, double lambda,
                                     double lambda0, double delta, double C) {
  WidthCondition out;
  out.constant = C;

  const double log_a = std::max(0.0, std::log(T * K * L * L / delta));
  out.first_sqrt_term = std::sqrt(lambda) * std::pow(L, -1.5) * std::pow(log_a, 1.5);
  out.first_poly_term = std::pow(T * K * L, 6.0) * std::log(T * K * L / delta) *
                        std::max(std::pow(lambda0, -4.0), 1.0);
  out.first_rhs = C * std::max(out.first_sqrt_term, out.first_poly_term);
  out.first_pass = m >= out.first_rhs;

  const double log_m = std::log(m);
  out.second_lhs = log_m > 0.0 ? m / (log_m * log_m * log_m)
                               : std::numeric_limits<double>::infinity();
  out.second_terms[0] = T * std::pow(L, 12.0) / lambda;
  out.second_terms[1] = std::pow(T, 7.0) * std::pow(lambda, -8.0) * std::pow(L, 18.0) *
                        std::pow(lambda + L * T, 6.0);
  out.second_terms[2] = std::pow(L, 21.0) * std::pow(T, 7.0) * std::pow(lambda, -7.0) *
                        std::pow(1.0 + std::sqrt(T / lambda), 6.0);
  out.second_rhs = C * (out.second_terms[0] + out.second_terms[1] + out.second_terms[2]);
  out.second_pass = out.second_lhs >= out.second_rhs;
  return out;
}

}  // namespace banditbench::ntk
