#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace banditbench::ntk {

/// Infinite-width tangent kernel of the depth-L ReLU network on a context
/// set, with the per-level covariances kept for inspection.
struct NtkMatrix {
  Eigen::MatrixXd H;
  int depth = 0;
  // sigma[l - 1] and h_tilde[l - 1] hold level l = 1..L.
  std::vector<Eigen::MatrixXd> sigma;
  std::vector<Eigen::MatrixXd> h_tilde;
};

/// 2 E[max(u,0) max(v,0)] for (u, v) ~ N(0, [[a, b], [b, c]]).
double relu_moment(double a, double b, double c);
/// 2 E[1(u >= 0) 1(v >= 0)] for the same covariance.
double step_moment(double a, double b, double c);

/// Closed-form arc-cosine recursion. Every context must have unit norm
/// (within 1e-9) and depth must be at least 2.
NtkMatrix ntk_matrix(std::span<const Eigen::VectorXd> contexts, int depth);

struct EffDimReport {
  double effective_dimension = 0.0;
  double log_det = 0.0;  // log det(I + H / lambda)
  double lambda = 0.0;
  double tk = 0.0;
  Eigen::VectorXd eigenvalues;  // descending
};

/// log det(I + H / lambda) / log(1 + TK / lambda), via eigendecomposition.
/// Rejects H with an eigenvalue below -1e-8 * ||H||.
EffDimReport effective_dimension(const Eigen::MatrixXd& H, double lambda, double tk);

struct TruncationBound {
  double bound = 0.0;  // head + tail
  double head = 0.0;   // sum of the d' largest eigenvalues
  double tail = 0.0;   // sum of the remaining eigenvalues
  // Every tail eigenvalue is at most 1 / TK (vacuously true with no tail).
  bool tail_hypothesis = true;
  // log det(I + H) with lambda = 1; the bound dominates this quantity.
  double log_det = 0.0;
  double effective_dimension = 0.0;
};

TruncationBound effdim_truncation_bound(const Eigen::MatrixXd& H, int d_prime, double tk);

/// nu = B + R sqrt(d_tilde log(1 + TK / lambda) + 2 + 2 log(1 / delta)).
double theory_nu(double B, double R, double d_tilde, double T, double K, double lambda,
                 double delta);

/// 1 / (22 e sqrt(pi)).
double theory_B_floor();
/// B = max(1 / (22 e sqrt(pi)), sqrt(2 h^T H^{-1} h)); H must be positive definite.
double theory_B(const Eigen::VectorXd& h, const Eigen::MatrixXd& H);

struct WidthCondition {
  // First inequality: m >= C * max(first_terms).
  double first_sqrt_term = 0.0;
  double first_poly_term = 0.0;
  double first_rhs = 0.0;
  bool first_pass = false;
  // Second inequality: m (log m)^{-3} >= C * sum(second_terms).
  double second_lhs = 0.0;
  double second_terms[3] = {0.0, 0.0, 0.0};
  double second_rhs = 0.0;
  bool second_pass = false;
  double constant = 1.0;
  std::string label = "diagnostic: constant C unknown";
};

WidthCondition check_width_condition(double m, double T, double K, double L, double lambda,
                                     double lambda0, double delta, double C = 1.0);

}  // namespace banditbench::ntk
