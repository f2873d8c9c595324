#pragma once

#include <cstddef>
#include <string_view>

#include <Eigen/Dense>

namespace banditbench {

enum class PosteriorMode { full, diagonal };

PosteriorMode parse_posterior_mode(std::string_view text);
std::string_view to_string(PosteriorMode mode);

/// U = lambda * I + sum g g^T / m.
///
/// Full mode keeps U^{-1} current with Sherman-Morrison updates (plus U itself
/// so the inverse can be rebuilt if an update ever looks corrupted). Diagonal
/// mode keeps only diag(U) and uses 1 / U_ii in place of U^{-1}.
class DesignMatrix {
 public:
  DesignMatrix(PosteriorMode mode, std::size_t dim, double lambda, double width);

  /// sqrt(lambda * g^T U^{-1} g / m).
  double sigma(const Eigen::Ref<const Eigen::VectorXd>& g) const;
  /// g^T U^{-1} g, or sum g_i^2 / U_ii in diagonal mode.
  double quadratic_form(const Eigen::Ref<const Eigen::VectorXd>& g) const;
  void update(const Eigen::Ref<const Eigen::VectorXd>& g);

  PosteriorMode mode() const { return mode_; }
  std::size_t dim() const { return dim_; }
  double lambda() const { return lambda_; }
  double width() const { return width_; }
  /// log det U; in diagonal mode the log det of the diagonal approximation.
  double log_det() const { return log_det_; }
  std::size_t updates() const { return updates_; }
  /// Number of times the inverse was rebuilt by a direct solve.
  std::size_t rebuilds() const { return rebuilds_; }

  /// Full mode only.
  const Eigen::MatrixXd& inverse() const;
  const Eigen::MatrixXd& matrix() const;
  /// Diagonal of U in either mode.
  Eigen::VectorXd diagonal() const;

 private:
  void check(const Eigen::Ref<const Eigen::VectorXd>& g) const;
  void rebuild();

  PosteriorMode mode_;
  std::size_t dim_;
  double lambda_;
  double width_;
  double log_det_;
  std::size_t updates_ = 0;
  std::size_t rebuilds_ = 0;
  Eigen::MatrixXd inverse_;
  Eigen::MatrixXd matrix_;
  Eigen::VectorXd diag_;
  Eigen::VectorXd scratch_;
};

}  // namespace banditbench
