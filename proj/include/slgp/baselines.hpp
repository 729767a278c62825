#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "slgp/design.hpp"
#include "slgp/random.hpp"

namespace slgp {

double matern52(double distance, double lengthscale, double variance);

struct GpHyperparameters {
  double lengthscale = 0.2;
  double signal_variance = 1.0;
  double noise_variance = 1e-2;
};

/// Homoscedastic GP regression with a Matern-5/2 kernel and constant prior
/// mean equal to the sample mean of the targets.
class GpSurrogate {
 public:
  static constexpr double kJitter = 1e-8;

  GpSurrogate(std::vector<double> x, std::vector<double> y, GpHyperparameters hyper);

  const GpHyperparameters& hyperparameters() const { return hyper_; }
  double prior_mean() const { return prior_mean_; }
  double log_marginal_likelihood() const { return log_marginal_; }
  std::size_t size() const { return x_.size(); }

  struct Prediction {
    double mean = 0.0;
    double sd = 0.0;
  };

  Prediction predict(double x) const;

 private:
  std::vector<double> x_;
  GpHyperparameters hyper_;
  double prior_mean_ = 0.0;
  Eigen::LLT<Eigen::MatrixXd> chol_;
  Eigen::VectorXd alpha_;
  double log_marginal_ = 0.0;
};

struct GpFit {
  GpSurrogate surrogate;
  std::vector<GpHyperparameters> starts;
  std::vector<double> start_log_marginal;
};

/// Maximum-likelihood hyperparameters from 8 seeded log-uniform starts,
/// each refined by Nelder-Mead in log space. Every (x, y) pair enters the
/// regression individually.
GpFit fit_gp_detailed(std::span<const double> x, std::span<const double> y,
                      std::uint64_t seed = 0, std::size_t starts = 8);

GpSurrogate fit_gp(std::span<const double> x, std::span<const double> y, std::uint64_t seed = 0);

/// E[(best - Y(x))^+] under the Gaussian predictive.
double expected_improvement(double mean, double sd, double best);
double expected_improvement(const GpSurrogate& surrogate, double x, double best);

struct GpOptimizationConfig {
  std::size_t steps = 10;
  std::size_t batch_size = 20;
  std::size_t candidates = 101;
  Strategy strategy = Strategy::adaptive;
};

/// Same loop as run_optimization with the GP surrogate: x_hat is the argmin of
/// the predictive mean and the adaptive rule maximizes EI against its minimum.
/// The returned state has an empty ensemble.
OptimizationState run_gp_optimization(const FieldOracle& oracle, Dataset initial,
                                      const GpOptimizationConfig& config, Rng& rng);

}  // namespace slgp
