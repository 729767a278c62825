#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "slgp/model.hpp"
#include "slgp/random.hpp"

namespace slgp {

enum class ChainStart {
  zero,  ///< prior mode
  map,   ///< posterior mode, found by Newton's method
};

struct PcnConfig {
  double beta = 0.1;
  std::size_t n_iterations = 5000;
  std::size_t burn_in = 2000;
  std::size_t thinning = 20;
  std::uint64_t seed = 0;
  /// Rescale beta during burn-in towards a 0.25 acceptance rate; frozen after.
  bool adapt = true;
  ChainStart start = ChainStart::zero;

  void validate() const;
  std::size_t retained() const { return (n_iterations - burn_in) / thinning; }
};

/// Retained pCN draws, stored column-wise (p x N).
struct PosteriorEnsemble {
  Eigen::MatrixXd draws;
  double acceptance_rate = 0.0;
  double final_beta = 0.0;

  std::size_t size() const { return static_cast<std::size_t>(draws.cols()); }
  std::size_t rank() const { return static_cast<std::size_t>(draws.rows()); }
  CoefficientVector draw(std::size_t j) const { return draws.col(static_cast<Eigen::Index>(j)); }
};

struct PcnStep {
  CoefficientVector state;
  double log_likelihood = 0.0;
  bool accepted = false;
};

/// One preconditioned Crank-Nicolson move. The proposal
/// sqrt(1 - beta^2) eps + beta xi leaves N(0, I) invariant, so only the
/// likelihood ratio enters the acceptance test.
PcnStep pcn_step(const CoefficientVector& current, double current_loglik,
                 const LikelihoodTerm& likelihood, double beta, Rng& rng);

PcnStep pcn_step(const CoefficientVector& current, double current_loglik, const Model& model,
                 const Dataset& data, double beta, Rng& rng);

/// Posterior mode of eps given data (the log posterior is strictly concave).
CoefficientVector find_map(const LikelihoodTerm& likelihood, std::size_t rank,
                           std::size_t max_iterations = 100);

PosteriorEnsemble run_pcn(const Model& model, const Dataset& data, const PcnConfig& config);

/// Independent chains seeded from config.seed, run concurrently and pooled in
/// chain order.
PosteriorEnsemble run_pcn_chains(const Model& model, const Dataset& data,
                                 const PcnConfig& config, std::size_t chains);

/// Pointwise average of the draws' densities at each x.
std::vector<DensityGrid> posterior_mean_field(const PosteriorEnsemble& ensemble,
                                              const Model& model,
                                              std::span<const double> x_grid);

}  // namespace slgp
