#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "slgp/basis.hpp"
#include "slgp/grid.hpp"

namespace slgp {

/// Gaussian coefficients driving one realisation of the finite-rank field.
using CoefficientVector = Eigen::VectorXd;

/// Prior mean m(x, t) of the latent field. An empty function means m == 0.
using MeanFunction = std::function<double(double x, double t)>;

/// A probability density tabulated on a quadrature grid.
struct DensityGrid {
  GridPtr grid;
  Eigen::VectorXd values;

  double integral() const { return grid->integrate(values); }
};

struct Observation {
  double x = 0.0;
  double t = 0.0;
};

/// Observed (x, t) couples, both coordinates in [0, 1].
class Dataset {
 public:
  Dataset() = default;
  explicit Dataset(std::vector<Observation> obs);

  void add(double x, double t);
  void add_batch(double x, std::span<const double> ts);

  std::size_t size() const { return obs_.size(); }
  bool empty() const { return obs_.empty(); }
  const std::vector<Observation>& observations() const { return obs_; }
  const Observation& operator[](std::size_t i) const { return obs_[i]; }

 private:
  std::vector<Observation> obs_;
};

/// The finite-rank spatial logistic Gaussian process
///
///   W(x, t) = m(x, t) + sum_j sqrt(lambda_j) e_j(x, t) eps_j,
///   p_x(t)  = exp(W(x, t)) / int_0^1 exp(W(x, u)) du,
///
/// with the integral replaced by the trapezoidal rule on `t_grid()`.
///
/// Internally every x-slice of W is reduced to 2q trigonometric coefficients
/// in t: with a = 2 pi omega_t t and b = 2 pi omega_x x,
///   cos(a + b) = cos a cos b - sin a sin b,  sin(a + b) = sin a cos b + cos a sin b,
/// so W(x, .) = sum_w A_w(x) cos(2 pi w t) + B_w(x) sin(2 pi w t). The map from
/// eps to (A, B) at a given x is `slice_map(x)`.
class Model {
 public:
  explicit Model(BasisSet basis, std::size_t grid_size = 101, MeanFunction mean = {});
  Model(BasisSet basis, QuadratureGrid t_grid, MeanFunction mean = {});

  const BasisSet& basis() const { return basis_; }
  std::size_t rank() const { return basis_.rank(); }
  const GridPtr& t_grid() const { return t_grid_; }
  std::size_t grid_size() const { return t_grid_->size(); }
  bool has_mean() const { return static_cast<bool>(mean_); }
  double mean_at(double x, double t) const { return mean_ ? mean_(x, t) : 0.0; }

  /// 2q x p matrix taking eps to the trigonometric coefficients of W(x, .).
  /// The sqrt(lambda) weights are folded in.
  Eigen::MatrixXd slice_map(double x) const;

  /// 2q x G table of cos(2 pi w t_k) (rows 0..q-1) and sin (rows q..2q-1).
  const Eigen::MatrixXd& trig_table() const { return trig_table_; }
  Eigen::VectorXd trig_at(double t) const;

  /// m(x, t_k) on the grid; zeros when there is no mean function.
  Eigen::VectorXd mean_on_grid(double x) const;

  void check_coefficients(const CoefficientVector& eps) const;

 private:
  BasisSet basis_;
  GridPtr t_grid_;
  MeanFunction mean_;
  Eigen::MatrixXd trig_table_;
};

/// One x-slice of a realisation: trig coefficients, log density on the grid,
/// and the log of the quadrature normalizer.
struct FieldSlice {
  double x = 0.0;
  Eigen::VectorXd coefficients;
  Eigen::VectorXd log_density;
  double log_normalizer = 0.0;

  Eigen::VectorXd density() const { return log_density.array().exp().matrix(); }
};

FieldSlice make_slice(const Model& model, const CoefficientVector& eps, double x);

/// log p_x(t) for a slice, with W evaluated exactly at t.
double slice_log_density(const Model& model, const FieldSlice& slice, double t);

/// W(x, t_k) on the model grid.
Eigen::VectorXd gp_eval(const Model& model, const CoefficientVector& eps, double x);

DensityGrid slgp_density(const Model& model, const CoefficientVector& eps, double x);

double log_density_at(const Model& model, const CoefficientVector& eps, double x, double t);

double log_likelihood(const Model& model, const CoefficientVector& eps, const Dataset& data);

/// -|eps|^2 / 2 + log_likelihood, i.e. the log posterior up to a constant.
double log_posterior(const Model& model, const CoefficientVector& eps, const Dataset& data);

/// Log-likelihood of a fixed dataset, precomputed for repeated evaluation.
///
/// Observations are grouped by distinct x. Per location only the stacked
/// slice map, the summed trig vectors of its t values and its count are kept,
/// so one evaluation costs O(locations * (p q + G q)).
class LikelihoodTerm {
 public:
  LikelihoodTerm(const Model& model, const Dataset& data);

  std::size_t locations() const { return static_cast<std::size_t>(counts_.size()); }
  std::size_t observations() const { return n_obs_; }

  double operator()(const CoefficientVector& eps) const;

  /// Log-likelihood and its gradient in eps.
  double value_and_gradient(const CoefficientVector& eps, Eigen::VectorXd& gradient) const;

  /// Minus the Hessian of the log-likelihood (positive semi-definite).
  Eigen::MatrixXd information(const CoefficientVector& eps) const;

 private:
  /// G x locations matrix of W on the grid, and per-location log normalizers.
  void evaluate(const CoefficientVector& eps, Eigen::MatrixXd& coeffs, Eigen::MatrixXd& field,
                Eigen::VectorXd& log_norm) const;

  Eigen::Index twice_q_ = 0;
  std::size_t n_obs_ = 0;
  Eigen::MatrixXd maps_;        // (2q * locations) x p
  Eigen::MatrixXd trig_sums_;   // 2q x locations
  Eigen::VectorXd counts_;
  Eigen::MatrixXd trig_table_;  // 2q x G
  Eigen::VectorXd quad_weights_;
  Eigen::MatrixXd mean_grid_;   // G x locations, empty without a mean
  double mean_data_ = 0.0;
};

}  // namespace slgp
