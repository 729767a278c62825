#include "slgp/grid.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace slgp {

QuadratureGrid::QuadratureGrid(std::vector<double> nodes) {
  if (nodes.size() < 2) {
    throw std::invalid_argument("quadrature grid needs at least two nodes");
  }
  for (std::size_t k = 1; k < nodes.size(); ++k) {
    if (!(nodes[k] > nodes[k - 1])) {
      throw std::invalid_argument("quadrature grid nodes must be strictly increasing");
    }
  }
  const auto n = static_cast<Eigen::Index>(nodes.size());
  nodes_ = Eigen::Map<const Eigen::VectorXd>(nodes.data(), n);
  weights_ = Eigen::VectorXd::Zero(n);
  for (Eigen::Index k = 0; k + 1 < n; ++k) {
    const double half = 0.5 * (nodes_[k + 1] - nodes_[k]);
    weights_[k] += half;
    weights_[k + 1] += half;
  }
}

QuadratureGrid QuadratureGrid::regular(std::size_t n, double lo, double hi) {
  if (n < 2 || !(hi > lo)) {
    throw std::invalid_argument("regular grid needs n >= 2 and hi > lo");
  }
  std::vector<double> nodes(n);
  for (std::size_t k = 0; k < n; ++k) {
    nodes[k] = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(n - 1);
  }
  nodes.back() = hi;
  return QuadratureGrid(std::move(nodes));
}

double QuadratureGrid::integrate(const Eigen::VectorXd& values) const {
  if (values.size() != nodes_.size()) {
    throw std::invalid_argument("integrand size does not match grid");
  }
  return weights_.dot(values);
}

Eigen::VectorXd QuadratureGrid::cumulative(const Eigen::VectorXd& values) const {
  if (values.size() != nodes_.size()) {
    throw std::invalid_argument("integrand size does not match grid");
  }
  Eigen::VectorXd out(values.size());
  out[0] = 0.0;
  for (Eigen::Index k = 1; k < values.size(); ++k) {
    out[k] = out[k - 1] + 0.5 * (nodes_[k] - nodes_[k - 1]) * (values[k] + values[k - 1]);
  }
  return out;
}

bool QuadratureGrid::same_nodes(const QuadratureGrid& other, double tol) const {
  if (other.size() != size()) return false;
  return (nodes_ - other.nodes_).cwiseAbs().maxCoeff() <= tol;
}

InverseCdf::InverseCdf(const QuadratureGrid& grid, const Eigen::VectorXd& density) {
  const Eigen::VectorXd cdf = grid.cumulative(density);
  const double total = cdf[cdf.size() - 1];
  if (!(total > 0.0) || !std::isfinite(total)) {
    throw std::invalid_argument("density has no mass on the grid");
  }
  nodes_.assign(grid.nodes().data(), grid.nodes().data() + grid.size());
  cdf_.resize(grid.size());
  for (std::size_t k = 0; k < cdf_.size(); ++k) {
    cdf_[k] = cdf[static_cast<Eigen::Index>(k)] / total;
  }
  cdf_.back() = 1.0;
}

double InverseCdf::operator()(double level) const {
  level = std::clamp(level, 0.0, 1.0);
  const auto it = std::lower_bound(cdf_.begin(), cdf_.end(), level);
  const auto k = static_cast<std::size_t>(it - cdf_.begin());
  if (k == 0) return nodes_.front();
  const double lo = cdf_[k - 1];
  const double hi = cdf_[k];
  if (hi <= lo) return nodes_[k];
  const double frac = (level - lo) / (hi - lo);
  return nodes_[k - 1] + frac * (nodes_[k] - nodes_[k - 1]);
}

double log_weighted_sum_exp(const Eigen::VectorXd& values, const Eigen::VectorXd& weights) {
  const double shift = values.maxCoeff();
  return shift + std::log(weights.dot((values.array() - shift).exp().matrix()));
}

}  // namespace slgp
