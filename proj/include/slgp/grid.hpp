#pragma once

#include <cstddef>
#include <memory>
#include <vector>

#include <Eigen/Core>

namespace slgp {

/// Sorted nodes on an interval together with trapezoidal quadrature weights.
///
/// All densities in the library live on one of these grids, and every
/// normalization, CDF and quantile is computed with the same rule so that
/// "integrates to one" holds exactly up to rounding.
class QuadratureGrid {
 public:
  explicit QuadratureGrid(std::vector<double> nodes);

  /// n equally spaced nodes covering [lo, hi], endpoints included.
  static QuadratureGrid regular(std::size_t n, double lo = 0.0, double hi = 1.0);

  std::size_t size() const { return static_cast<std::size_t>(nodes_.size()); }
  const Eigen::VectorXd& nodes() const { return nodes_; }
  const Eigen::VectorXd& weights() const { return weights_; }
  double node(std::size_t k) const { return nodes_[static_cast<Eigen::Index>(k)]; }
  double lower() const { return nodes_[0]; }
  double upper() const { return nodes_[nodes_.size() - 1]; }

  double integrate(const Eigen::VectorXd& values) const;

  /// Running trapezoidal integral, starting at 0 on the first node.
  Eigen::VectorXd cumulative(const Eigen::VectorXd& values) const;

  bool same_nodes(const QuadratureGrid& other, double tol = 1e-12) const;

 private:
  Eigen::VectorXd nodes_;
  Eigen::VectorXd weights_;
};

using GridPtr = std::shared_ptr<const QuadratureGrid>;

/// Piecewise-linear inverse of the trapezoidal CDF of a nonnegative function
/// on a grid. The CDF is rescaled so that its last value is exactly one.
class InverseCdf {
 public:
  InverseCdf(const QuadratureGrid& grid, const Eigen::VectorXd& density);

  /// Smallest t whose interpolated CDF reaches level, level in [0, 1].
  double operator()(double level) const;

 private:
  std::vector<double> nodes_;
  std::vector<double> cdf_;
};

/// log(sum_k w_k exp(v_k)) with a max shift.
double log_weighted_sum_exp(const Eigen::VectorXd& values, const Eigen::VectorXd& weights);

}  // namespace slgp
