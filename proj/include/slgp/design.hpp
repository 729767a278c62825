#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "slgp/functionals.hpp"
#include "slgp/mcmc.hpp"
#include "slgp/model.hpp"
#include "slgp/random.hpp"
#include "slgp/reference_fields.hpp"

namespace slgp {

/// Mixture N^-1 sum_j p_x(.; eps_j): the posterior predictive density of a
/// new observation at x.
DensityGrid predictive_density(const PosteriorEnsemble& ensemble, const Model& model, double x);

/// K i.i.d. draws from the predictive density at x_new.
std::vector<double> simulate_future_batch(const PosteriorEnsemble& ensemble, const Model& model,
                                          double x_new, std::size_t batch_size, Rng& rng);

/// Importance weights w_j proportional to prod_l p_{x_new}(t_l; eps_j), normalized.
std::vector<double> reweight(const PosteriorEnsemble& ensemble, const Model& model, double x_new,
                             std::span<const double> batch);

struct BatchSimulation {
  double x_new = 0.0;
  std::vector<double> draws;
  std::vector<double> weights;
  double future_minimum = 0.0;
};

/// Simulation-based expected quantile improvement.
///
/// Built once per posterior ensemble: the functional values rho(p_x(.; eps_j))
/// on the x grid are tabulated and sorted so that each simulated batch only
/// costs a reweighting plus one weighted-quantile sweep per grid point.
class EqiEstimator {
 public:
  EqiEstimator(const PosteriorEnsemble& ensemble, const Model& model,
               std::span<const double> x_grid, const Functional& rho, double alpha);

  /// min over the grid of the unweighted alpha-quantile curve.
  double current_minimum() const { return current_minimum_; }

  /// Weighted alpha-quantile curve of the functional on the grid.
  std::vector<double> quantile_curve(std::span<const double> weights, double alpha) const;
  std::vector<double> quantile_curve(double alpha) const;

  double future_minimum(std::span<const double> weights) const;

  struct Estimate {
    double value = 0.0;
    std::vector<BatchSimulation> simulations;
  };

  /// Mean over `simulations` batches of max(0, current - future minimum).
  Estimate estimate(double x_new, std::size_t batch_size, std::size_t simulations, Rng& rng,
                    bool keep_simulations = false) const;

  const Eigen::MatrixXd& functional_values() const { return values_; }
  std::span<const double> x_grid() const { return x_grid_; }

 private:
  const PosteriorEnsemble* ensemble_;
  const Model* model_;
  std::vector<double> x_grid_;
  double alpha_;
  Eigen::MatrixXd values_;                     // N x |grid|
  std::vector<std::vector<std::size_t>> order_;  // ascending order per grid column
  double current_minimum_ = 0.0;
};

double eqi(const PosteriorEnsemble& ensemble, const Model& model, double x_new,
           std::size_t batch_size, std::size_t simulations, std::span<const double> x_grid,
           const Functional& rho, double alpha, Rng& rng);

struct EqiResult {
  std::vector<double> candidates;
  std::vector<double> values;
  std::size_t chosen = 0;
  std::size_t batch_size = 0;
  std::size_t simulations = 0;
  double alpha = 0.0;
  std::uint64_t seed = 0;
};

/// EQI at every candidate, with the candidates doubling as the x grid for the
/// curve minima. Every candidate replays the same random stream (common
/// random numbers), so the result does not depend on evaluation order or on
/// `threads`. Ties go to the smallest index.
EqiResult select_next(const PosteriorEnsemble& ensemble, const Model& model,
                      std::span<const double> candidates, std::size_t batch_size,
                      std::size_t simulations, const Functional& rho, double alpha, Rng& rng,
                      std::size_t threads = 1);

/// Samples k responses at x, and exposes the true objective g(x).
struct FieldOracle {
  std::function<std::vector<double>(double x, std::size_t k, Rng& rng)> sample;
  std::function<double(double x)> objective;
};

/// Oracle backed by a closed-form reference field; the objective is its median.
FieldOracle make_oracle(const ReferenceField& field);

enum class Strategy { adaptive, random };

std::string_view to_string(Strategy s);

struct StepRecord {
  std::size_t step = 0;
  double chosen_x = 0.0;  ///< NaN for the initial record
  std::vector<double> criterion;  ///< acquisition values on the candidate grid
  double estimated_minimizer = 0.0;
  double gap = 0.0;
  double acceptance_rate = 0.0;
};

struct OptimizationState {
  Dataset dataset;
  PosteriorEnsemble ensemble;
  StepRecord initial;
  std::vector<StepRecord> history;
};

struct OptimizationConfig {
  std::size_t steps = 10;
  std::size_t batch_size = 20;
  std::size_t simulations = 150;
  std::size_t candidates = 101;
  PcnConfig pcn;
  Functional rho = Functional::median();
  double alpha = 0.9;
  Strategy strategy = Strategy::adaptive;
  std::size_t threads = 1;
};

std::vector<double> candidate_grid(std::size_t n);

/// Optimality gap g(x_hat) - min over the grid of g.
double optimality_gap(const FieldOracle& oracle, std::span<const double> grid, double x_hat);

/// Sequential design loop: fit by pCN, choose x (EQI or uniform), add a batch
/// from the oracle, refit, record the estimated minimizer of the posterior
/// median curve and its optimality gap.
OptimizationState run_optimization(const FieldOracle& oracle, Dataset initial, const Model& model,
                                   const OptimizationConfig& config, Rng& rng);

}  // namespace slgp
