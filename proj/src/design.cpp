#include "slgp/design.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>
#include <stdexcept>
#include <thread>

namespace slgp {

namespace {

void normalize_log_weights(const Eigen::VectorXd& log_w, std::vector<double>& out) {
  const double shift = log_w.maxCoeff();
  out.resize(static_cast<std::size_t>(log_w.size()));
  double total = 0.0;
  for (Eigen::Index j = 0; j < log_w.size(); ++j) {
    out[static_cast<std::size_t>(j)] = std::exp(log_w[j] - shift);
    total += out[static_cast<std::size_t>(j)];
  }
  for (auto& w : out) w /= total;
}

/// Slices of every draw at one x, batched.
struct EnsembleSlices {
  Eigen::MatrixXd coefficients;  // 2q x N
  Eigen::VectorXd log_normalizer;
  Eigen::VectorXd predictive;    // mixture density on the grid
};

EnsembleSlices slice_ensemble(const PosteriorEnsemble& ensemble, const Model& model, double x) {
  if (ensemble.size() == 0) throw std::invalid_argument("posterior ensemble is empty");
  if (!(x >= 0.0 && x <= 1.0)) throw std::invalid_argument("x must lie in [0, 1]");
  EnsembleSlices s;
  s.coefficients = model.slice_map(x) * ensemble.draws;
  Eigen::MatrixXd field = model.trig_table().transpose() * s.coefficients;
  if (model.has_mean()) field.colwise() += model.mean_on_grid(x);
  const auto n = field.cols();
  const Eigen::VectorXd& qw = model.t_grid()->weights();
  s.log_normalizer.resize(n);
  s.predictive = Eigen::VectorXd::Zero(field.rows());
  for (Eigen::Index j = 0; j < n; ++j) {
    s.log_normalizer[j] = log_weighted_sum_exp(field.col(j), qw);
    s.predictive += (field.col(j).array() - s.log_normalizer[j]).exp().matrix();
  }
  s.predictive /= static_cast<double>(n);
  return s;
}

}  // namespace

DensityGrid predictive_density(const PosteriorEnsemble& ensemble, const Model& model, double x) {
  return {model.t_grid(), slice_ensemble(ensemble, model, x).predictive};
}

std::vector<double> simulate_future_batch(const PosteriorEnsemble& ensemble, const Model& model,
                                          double x_new, std::size_t batch_size, Rng& rng) {
  if (batch_size == 0) throw std::invalid_argument("batch size must be positive");
  const DensityGrid pred = predictive_density(ensemble, model, x_new);
  const InverseCdf inverse(*pred.grid, pred.values);
  std::vector<double> out(batch_size);
  for (auto& t : out) t = inverse(uniform01(rng));
  return out;
}

std::vector<double> reweight(const PosteriorEnsemble& ensemble, const Model& model, double x_new,
                             std::span<const double> batch) {
  const std::size_t n = ensemble.size();
  if (n == 0) throw std::invalid_argument("posterior ensemble is empty");
  Eigen::VectorXd log_w = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  for (std::size_t j = 0; j < n && !batch.empty(); ++j) {
    const FieldSlice slice = make_slice(model, ensemble.draw(j), x_new);
    double total = 0.0;
    for (double t : batch) total += slice_log_density(model, slice, t);
    log_w[static_cast<Eigen::Index>(j)] = total;
  }
  std::vector<double> w;
  normalize_log_weights(log_w, w);
  return w;
}

EqiEstimator::EqiEstimator(const PosteriorEnsemble& ensemble, const Model& model,
                           std::span<const double> x_grid, const Functional& rho, double alpha)
    : ensemble_(&ensemble), model_(&model), x_grid_(x_grid.begin(), x_grid.end()), alpha_(alpha) {
  if (ensemble.size() == 0) throw std::invalid_argument("posterior ensemble is empty");
  if (x_grid_.empty()) throw std::invalid_argument("x grid is empty");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha must lie in (0, 1]");
  values_ = functional_matrix(ensemble, model, x_grid_, rho);
  const auto n = static_cast<std::size_t>(values_.rows());
  order_.resize(x_grid_.size());
  for (std::size_t i = 0; i < x_grid_.size(); ++i) {
    auto& ord = order_[i];
    ord.resize(n);
    std::iota(ord.begin(), ord.end(), std::size_t{0});
    const auto col = values_.col(static_cast<Eigen::Index>(i));
    std::stable_sort(ord.begin(), ord.end(), [&](std::size_t a, std::size_t b) {
      return col[static_cast<Eigen::Index>(a)] < col[static_cast<Eigen::Index>(b)];
    });
  }
  const auto curve = quantile_curve(alpha_);
  current_minimum_ = *std::min_element(curve.begin(), curve.end());
}

std::vector<double> EqiEstimator::quantile_curve(std::span<const double> weights,
                                                 double alpha) const {
  if (weights.size() != static_cast<std::size_t>(values_.rows())) {
    throw std::invalid_argument("one weight per draw is required");
  }
  std::vector<double> curve(x_grid_.size());
  for (std::size_t i = 0; i < x_grid_.size(); ++i) {
    const auto col = values_.col(static_cast<Eigen::Index>(i));
    double cumulative = 0.0;
    double value = col[static_cast<Eigen::Index>(order_[i].back())];
    for (std::size_t j : order_[i]) {
      cumulative += weights[j];
      if (cumulative >= alpha - 1e-12) {
        value = col[static_cast<Eigen::Index>(j)];
        break;
      }
    }
    curve[i] = value;
  }
  return curve;
}

std::vector<double> EqiEstimator::quantile_curve(double alpha) const {
  const auto n = static_cast<std::size_t>(values_.rows());
  const std::vector<double> uniform(n, 1.0 / static_cast<double>(n));
  return quantile_curve(uniform, alpha);
}

double EqiEstimator::future_minimum(std::span<const double> weights) const {
  const auto curve = quantile_curve(weights, alpha_);
  return *std::min_element(curve.begin(), curve.end());
}

EqiEstimator::Estimate EqiEstimator::estimate(double x_new, std::size_t batch_size,
                                              std::size_t simulations, Rng& rng,
                                              bool keep_simulations) const {
  if (simulations == 0) throw std::invalid_argument("need at least one simulation");
  Estimate out;
  const auto n = static_cast<std::size_t>(values_.rows());
  if (batch_size == 0) {
    if (keep_simulations) {
      for (std::size_t i = 0; i < simulations; ++i) {
        out.simulations.push_back(
            {x_new, {}, std::vector<double>(n, 1.0 / static_cast<double>(n)), current_minimum_});
      }
    }
    return out;
  }
  const EnsembleSlices slices = slice_ensemble(*ensemble_, *model_, x_new);
  const InverseCdf inverse(*model_->t_grid(), slices.predictive);
  const auto twice_q = slices.coefficients.rows();
  const double k = static_cast<double>(batch_size);
  std::vector<double> batch(batch_size);
  std::vector<double> weights;
  double total = 0.0;
  for (std::size_t i = 0; i < simulations; ++i) {
    Eigen::VectorXd trig_sum = Eigen::VectorXd::Zero(twice_q);
    for (auto& t : batch) {
      t = inverse(uniform01(rng));
      trig_sum += model_->trig_at(t);
    }
    const Eigen::VectorXd log_w =
        slices.coefficients.transpose() * trig_sum - k * slices.log_normalizer;
    normalize_log_weights(log_w, weights);
    const double future = future_minimum(weights);
    total += std::max(0.0, current_minimum_ - future);
    if (keep_simulations) out.simulations.push_back({x_new, batch, weights, future});
  }
  out.value = total / static_cast<double>(simulations);
  return out;
}

double eqi(const PosteriorEnsemble& ensemble, const Model& model, double x_new,
           std::size_t batch_size, std::size_t simulations, std::span<const double> x_grid,
           const Functional& rho, double alpha, Rng& rng) {
  const EqiEstimator estimator(ensemble, model, x_grid, rho, alpha);
  return estimator.estimate(x_new, batch_size, simulations, rng).value;
}

EqiResult select_next(const PosteriorEnsemble& ensemble, const Model& model,
                      std::span<const double> candidates, std::size_t batch_size,
                      std::size_t simulations, const Functional& rho, double alpha, Rng& rng,
                      std::size_t threads) {
  if (candidates.empty()) throw std::invalid_argument("candidate list is empty");
  EqiResult result;
  result.candidates.assign(candidates.begin(), candidates.end());
  result.values.assign(candidates.size(), 0.0);
  result.batch_size = batch_size;
  result.simulations = simulations;
  result.alpha = alpha;
  result.seed = rng();

  const EqiEstimator estimator(ensemble, model, candidates, rho, alpha);
  auto work = [&](std::size_t begin, std::size_t stride) {
    for (std::size_t c = begin; c < candidates.size(); c += stride) {
      Rng stream(result.seed);
      result.values[c] = estimator.estimate(candidates[c], batch_size, simulations, stream).value;
    }
  };
  threads = std::clamp<std::size_t>(threads, 1, candidates.size());
  if (threads == 1) {
    work(0, 1);
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < threads; ++w) pool.emplace_back(work, w, threads);
  }
  result.chosen = static_cast<std::size_t>(
      std::max_element(result.values.begin(), result.values.end()) - result.values.begin());
  return result;
}

FieldOracle make_oracle(const ReferenceField& field) {
  return {[field](double x, std::size_t k, Rng& rng) { return sample_reference(field, x, k, rng); },
          [field](double x) { return field.median_at(x); }};
}

std::string_view to_string(Strategy s) { return s == Strategy::adaptive ? "adaptive" : "random"; }

std::vector<double> candidate_grid(std::size_t n) {
  if (n == 0) throw std::invalid_argument("candidate grid needs at least one point");
  if (n == 1) return {0.5};
  std::vector<double> xs(n);
  for (std::size_t i = 0; i < n; ++i) xs[i] = static_cast<double>(i) / static_cast<double>(n - 1);
  return xs;
}

double optimality_gap(const FieldOracle& oracle, std::span<const double> grid, double x_hat) {
  double best = std::numeric_limits<double>::infinity();
  for (double x : grid) best = std::min(best, oracle.objective(x));
  return std::max(0.0, oracle.objective(x_hat) - best);
}

namespace {

StepRecord summarize_fit(const EqiEstimator& estimator, const FieldOracle& oracle,
                         std::span<const double> grid, std::size_t step, double acceptance) {
  StepRecord rec;
  rec.step = step;
  rec.chosen_x = std::numeric_limits<double>::quiet_NaN();
  const auto median_curve = estimator.quantile_curve(0.5);
  const auto best = static_cast<std::size_t>(
      std::min_element(median_curve.begin(), median_curve.end()) - median_curve.begin());
  rec.estimated_minimizer = grid[best];
  rec.gap = optimality_gap(oracle, grid, rec.estimated_minimizer);
  rec.acceptance_rate = acceptance;
  return rec;
}

}  // namespace

OptimizationState run_optimization(const FieldOracle& oracle, Dataset initial, const Model& model,
                                   const OptimizationConfig& config, Rng& rng) {
  if (initial.empty()) throw std::invalid_argument("initial dataset is empty");
  config.pcn.validate();
  const std::vector<double> grid = candidate_grid(config.candidates);

  OptimizationState state;
  state.dataset = std::move(initial);
  auto fit = [&] {
    PcnConfig pcn = config.pcn;
    pcn.seed = rng();
    state.ensemble = run_pcn(model, state.dataset, pcn);
  };

  fit();
  auto estimator =
      std::make_unique<EqiEstimator>(state.ensemble, model, grid, config.rho, config.alpha);
  state.initial = summarize_fit(*estimator, oracle, grid, 0, state.ensemble.acceptance_rate);

  for (std::size_t step = 1; step <= config.steps; ++step) {
    double x_next = 0.0;
    std::vector<double> criterion;
    if (config.strategy == Strategy::adaptive) {
      const EqiResult choice =
          select_next(state.ensemble, model, grid, config.batch_size, config.simulations,
                      config.rho, config.alpha, rng, config.threads);
      x_next = grid[choice.chosen];
      criterion = choice.values;
    } else {
      x_next = uniform01(rng);
    }
    const auto batch = oracle.sample(x_next, config.batch_size, rng);
    state.dataset.add_batch(x_next, batch);

    fit();
    estimator =
        std::make_unique<EqiEstimator>(state.ensemble, model, grid, config.rho, config.alpha);
    StepRecord rec = summarize_fit(*estimator, oracle, grid, step, state.ensemble.acceptance_rate);
    rec.chosen_x = x_next;
    rec.criterion = std::move(criterion);
    state.history.push_back(std::move(rec));
  }
  return state;
}

}  // namespace slgp
