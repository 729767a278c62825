#include "slgp/functionals.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace slgp {

void Functional::validate() const {
  if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("quantile level must lie in (0, 1)");
}

double apply_functional(const DensityGrid& density, const Functional& rho) {
  rho.validate();
  return InverseCdf(*density.grid, density.values)(rho.level);
}

Eigen::VectorXd functional_ensemble(const PosteriorEnsemble& ensemble, const Model& model,
                                    double x, const Functional& rho) {
  if (ensemble.size() == 0) throw std::invalid_argument("posterior ensemble is empty");
  rho.validate();
  Eigen::VectorXd out(static_cast<Eigen::Index>(ensemble.size()));
  const auto& grid = *model.t_grid();
  for (std::size_t j = 0; j < ensemble.size(); ++j) {
    const FieldSlice s = make_slice(model, ensemble.draw(j), x);
    out[static_cast<Eigen::Index>(j)] = InverseCdf(grid, s.density())(rho.level);
  }
  return out;
}

Eigen::MatrixXd functional_matrix(const PosteriorEnsemble& ensemble, const Model& model,
                                  std::span<const double> x_grid, const Functional& rho) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(ensemble.size()),
                      static_cast<Eigen::Index>(x_grid.size()));
  for (std::size_t i = 0; i < x_grid.size(); ++i) {
    out.col(static_cast<Eigen::Index>(i)) = functional_ensemble(ensemble, model, x_grid[i], rho);
  }
  return out;
}

double weighted_quantile(std::span<const double> values, std::span<const double> weights,
                         double alpha) {
  if (values.empty() || values.size() != weights.size()) {
    throw std::invalid_argument("weighted quantile needs matching nonempty inputs");
  }
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  double cumulative = 0.0;
  for (std::size_t i : order) {
    cumulative += weights[i];
    if (cumulative >= alpha - 1e-12) return values[i];
  }
  return values[order.back()];
}

std::size_t QuantileCurve::argmin() const {
  return static_cast<std::size_t>(std::min_element(values.begin(), values.end()) - values.begin());
}

double QuantileCurve::min() const { return *std::min_element(values.begin(), values.end()); }

QuantileCurve posterior_quantile_curve(const PosteriorEnsemble& ensemble, const Model& model,
                                       std::span<const double> x_grid, const Functional& rho,
                                       double alpha, std::optional<std::span<const double>> weights) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha must lie in (0, 1]");
  const std::size_t n = ensemble.size();
  std::vector<double> w(n, 1.0 / static_cast<double>(n));
  if (weights) {
    if (weights->size() != n) throw std::invalid_argument("one weight per draw is required");
    double total = 0.0;
    for (double v : *weights) {
      if (!(v >= 0.0)) throw std::invalid_argument("weights must be nonnegative");
      total += v;
    }
    if (std::abs(total - 1.0) > 1e-9) throw std::invalid_argument("weights must sum to one");
    w.assign(weights->begin(), weights->end());
  }
  QuantileCurve curve;
  curve.alpha = alpha;
  curve.x_grid.assign(x_grid.begin(), x_grid.end());
  curve.values.reserve(x_grid.size());
  for (double x : x_grid) {
    const Eigen::VectorXd g = functional_ensemble(ensemble, model, x, rho);
    curve.values.push_back(weighted_quantile({g.data(), n}, w, alpha));
  }
  return curve;
}

double ish_distance(std::span<const DensityGrid> field_a, std::span<const DensityGrid> field_b,
                    std::span<const double> x_grid) {
  if (field_a.size() != field_b.size() || field_a.size() != x_grid.size()) {
    throw std::invalid_argument("density fields must share the x grid");
  }
  if (x_grid.size() < 2) throw std::invalid_argument("x grid needs at least two points");
  Eigen::VectorXd per_slice(static_cast<Eigen::Index>(x_grid.size()));
  for (std::size_t i = 0; i < x_grid.size(); ++i) {
    const auto& a = field_a[i];
    const auto& b = field_b[i];
    if (!a.grid->same_nodes(*b.grid)) throw std::invalid_argument("density grids differ");
    const Eigen::VectorXd diff =
        (a.values.cwiseMax(0.0).cwiseSqrt() - b.values.cwiseMax(0.0).cwiseSqrt()).cwiseAbs2();
    per_slice[static_cast<Eigen::Index>(i)] = a.grid->integrate(diff);
  }
  const QuadratureGrid xq(std::vector<double>(x_grid.begin(), x_grid.end()));
  return xq.integrate(per_slice);
}

}  // namespace slgp
