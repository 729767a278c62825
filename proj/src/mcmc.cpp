#include "slgp/mcmc.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <thread>

#include <Eigen/Cholesky>

namespace slgp {

namespace {

constexpr std::size_t kAdaptWindow = 50;
constexpr double kTargetAcceptance = 0.25;

}  // namespace

void PcnConfig::validate() const {
  if (!(beta > 0.0 && beta <= 1.0)) throw std::invalid_argument("pCN beta must lie in (0, 1]");
  if (n_iterations == 0) throw std::invalid_argument("pCN needs at least one iteration");
  if (burn_in >= n_iterations) throw std::invalid_argument("burn-in must be below the iteration count");
  if (thinning == 0) throw std::invalid_argument("thinning must be positive");
}

PcnStep pcn_step(const CoefficientVector& current, double current_loglik,
                 const LikelihoodTerm& likelihood, double beta, Rng& rng) {
  if (!(beta > 0.0 && beta <= 1.0)) throw std::invalid_argument("pCN beta must lie in (0, 1]");
  const Eigen::VectorXd xi = standard_normal(current.size(), rng);
  CoefficientVector proposal = std::sqrt(1.0 - beta * beta) * current + beta * xi;
  const double proposal_loglik = likelihood(proposal);
  const double log_u = std::log(uniform01(rng));
  if (log_u < proposal_loglik - current_loglik) {
    return {std::move(proposal), proposal_loglik, true};
  }
  return {current, current_loglik, false};
}

PcnStep pcn_step(const CoefficientVector& current, double current_loglik, const Model& model,
                 const Dataset& data, double beta, Rng& rng) {
  model.check_coefficients(current);
  return pcn_step(current, current_loglik, LikelihoodTerm(model, data), beta, rng);
}

CoefficientVector find_map(const LikelihoodTerm& likelihood, std::size_t rank,
                           std::size_t max_iterations) {
  const auto p = static_cast<Eigen::Index>(rank);
  CoefficientVector eps = CoefficientVector::Zero(p);
  if (likelihood.observations() == 0) return eps;
  Eigen::VectorXd grad;
  double value = likelihood.value_and_gradient(eps, grad) - 0.5 * eps.squaredNorm();
  for (std::size_t it = 0; it < max_iterations; ++it) {
    grad -= eps;
    if (grad.norm() < 1e-9 * (1.0 + std::abs(value))) break;
    Eigen::MatrixXd precision = likelihood.information(eps);
    precision.diagonal().array() += 1.0;
    const Eigen::VectorXd direction = precision.llt().solve(grad);
    double step = 1.0;
    bool improved = false;
    CoefficientVector candidate;
    Eigen::VectorXd candidate_grad;
    double candidate_value = value;
    while (step > 1e-10) {
      candidate = eps + step * direction;
      candidate_value =
          likelihood.value_and_gradient(candidate, candidate_grad) - 0.5 * candidate.squaredNorm();
      if (candidate_value >= value) {
        improved = true;
        break;
      }
      step *= 0.5;
    }
    if (!improved) break;
    const double gain = candidate_value - value;
    eps = std::move(candidate);
    grad = std::move(candidate_grad);
    value = candidate_value;
    if (gain < 1e-12 * (1.0 + std::abs(value)) && step == 1.0) break;
  }
  return eps;
}

PosteriorEnsemble run_pcn(const Model& model, const Dataset& data, const PcnConfig& config) {
  config.validate();
  const LikelihoodTerm likelihood(model, data);
  const auto p = static_cast<Eigen::Index>(model.rank());

  CoefficientVector state = config.start == ChainStart::map ? find_map(likelihood, model.rank())
                                                           : CoefficientVector::Zero(p);
  double loglik = likelihood(state);
  Rng rng(config.seed);
  double beta = config.beta;

  PosteriorEnsemble out;
  out.draws.resize(p, static_cast<Eigen::Index>(config.retained()));
  std::size_t accepted = 0;
  std::size_t window_accepted = 0;
  Eigen::Index kept = 0;
  for (std::size_t it = 1; it <= config.n_iterations; ++it) {
    PcnStep step = pcn_step(state, loglik, likelihood, beta, rng);
    state = std::move(step.state);
    loglik = step.log_likelihood;
    if (step.accepted) {
      ++accepted;
      ++window_accepted;
    }
    if (it <= config.burn_in) {
      if (config.adapt && it % kAdaptWindow == 0) {
        const double rate = static_cast<double>(window_accepted) / kAdaptWindow;
        beta = std::clamp(beta * std::exp(2.0 * (rate - kTargetAcceptance)), 1e-4, 1.0);
        window_accepted = 0;
      }
    } else if ((it - config.burn_in) % config.thinning == 0) {
      out.draws.col(kept++) = state;
    }
  }
  out.acceptance_rate = static_cast<double>(accepted) / static_cast<double>(config.n_iterations);
  out.final_beta = beta;
  return out;
}

PosteriorEnsemble run_pcn_chains(const Model& model, const Dataset& data,
                                 const PcnConfig& config, std::size_t chains) {
  if (chains == 0) throw std::invalid_argument("need at least one chain");
  config.validate();
  if (chains == 1) return run_pcn(model, data, config);
  std::vector<PosteriorEnsemble> results(chains);
  {
    std::vector<std::jthread> workers;
    for (std::size_t c = 0; c < chains; ++c) {
      workers.emplace_back([&, c] {
        PcnConfig chain_config = config;
        chain_config.seed = derive_seed(config.seed, c);
        results[c] = run_pcn(model, data, chain_config);
      });
    }
  }
  PosteriorEnsemble pooled;
  const auto per_chain = static_cast<Eigen::Index>(config.retained());
  pooled.draws.resize(static_cast<Eigen::Index>(model.rank()),
                      per_chain * static_cast<Eigen::Index>(chains));
  for (std::size_t c = 0; c < chains; ++c) {
    pooled.draws.middleCols(static_cast<Eigen::Index>(c) * per_chain, per_chain) = results[c].draws;
    pooled.acceptance_rate += results[c].acceptance_rate / static_cast<double>(chains);
    pooled.final_beta += results[c].final_beta / static_cast<double>(chains);
  }
  return pooled;
}

std::vector<DensityGrid> posterior_mean_field(const PosteriorEnsemble& ensemble,
                                              const Model& model,
                                              std::span<const double> x_grid) {
  if (ensemble.size() == 0) throw std::invalid_argument("posterior ensemble is empty");
  std::vector<DensityGrid> field;
  field.reserve(x_grid.size());
  const auto n = static_cast<double>(ensemble.size());
  for (double x : x_grid) {
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(model.grid_size()));
    for (std::size_t j = 0; j < ensemble.size(); ++j) {
      mean += slgp_density(model, ensemble.draw(j), x).values;
    }
    field.push_back({model.t_grid(), mean / n});
  }
  return field;
}

}  // namespace slgp
