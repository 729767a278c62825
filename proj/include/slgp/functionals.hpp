#pragma once

#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "slgp/mcmc.hpp"
#include "slgp/model.hpp"

namespace slgp {

/// Quantile functional of level tau; the median is tau = 0.5.
struct Functional {
  double level = 0.5;

  static Functional median() { return {0.5}; }
  void validate() const;
};

/// tau-quantile of a grid density, from the linearly interpolated
/// trapezoidal CDF.
double apply_functional(const DensityGrid& density, const Functional& rho);

/// rho applied to the slice density of every draw at x.
Eigen::VectorXd functional_ensemble(const PosteriorEnsemble& ensemble, const Model& model,
                                    double x, const Functional& rho);

/// N x |x_grid| matrix of functional_ensemble values, one column per x.
Eigen::MatrixXd functional_matrix(const PosteriorEnsemble& ensemble, const Model& model,
                                  std::span<const double> x_grid, const Functional& rho);

/// Smallest value whose cumulative weight (values sorted ascending) reaches
/// alpha. Cumulative sums within 1e-12 of alpha count as reaching it.
double weighted_quantile(std::span<const double> values, std::span<const double> weights,
                         double alpha);

struct QuantileCurve {
  std::vector<double> x_grid;
  std::vector<double> values;
  double alpha = 0.9;

  std::size_t argmin() const;
  double min() const;
};

QuantileCurve posterior_quantile_curve(const PosteriorEnsemble& ensemble, const Model& model,
                                       std::span<const double> x_grid, const Functional& rho,
                                       double alpha,
                                       std::optional<std::span<const double>> weights = {});

/// Integrated squared Hellinger distance between two density fields given
/// slice-wise on a shared x grid: trapezoidal in t, then in x.
double ish_distance(std::span<const DensityGrid> field_a, std::span<const DensityGrid> field_b,
                    std::span<const double> x_grid);

}  // namespace slgp
