#include "slgp/baselines.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>

namespace slgp {

namespace {

// Search box for (log lengthscale, log signal variance, log noise variance).
constexpr std::array<double, 3> kLogLower = {-7.0, -18.0, -23.0};
constexpr std::array<double, 3> kLogUpper = {2.3, 2.3, 2.3};

GpHyperparameters from_log(const std::array<double, 3>& v) {
  std::array<double, 3> c{};
  for (std::size_t i = 0; i < 3; ++i) c[i] = std::clamp(v[i], kLogLower[i], kLogUpper[i]);
  return {std::exp(c[0]), std::exp(c[1]), std::exp(c[2])};
}

struct Objective {
  const std::vector<double>* x;
  const std::vector<double>* y;
};

double negative_lml(const gsl_vector* v, void* params) {
  const auto* obj = static_cast<const Objective*>(params);
  std::array<double, 3> raw{gsl_vector_get(v, 0), gsl_vector_get(v, 1), gsl_vector_get(v, 2)};
  double penalty = 0.0;
  for (std::size_t i = 0; i < 3; ++i) {
    const double over = std::max(0.0, raw[i] - kLogUpper[i]) + std::max(0.0, kLogLower[i] - raw[i]);
    penalty += 1e3 * over * over;
  }
  const GpSurrogate gp(*obj->x, *obj->y, from_log(raw));
  const double lml = gp.log_marginal_likelihood();
  if (!std::isfinite(lml)) return 1e300;
  return -lml + penalty;
}

std::array<double, 3> nelder_mead(const Objective& obj, const std::array<double, 3>& start) {
  const gsl_multimin_fminimizer_type* type = gsl_multimin_fminimizer_nmsimplex2;
  gsl_multimin_fminimizer* solver = gsl_multimin_fminimizer_alloc(type, 3);
  gsl_vector* x0 = gsl_vector_alloc(3);
  gsl_vector* step = gsl_vector_alloc(3);
  for (std::size_t i = 0; i < 3; ++i) {
    gsl_vector_set(x0, i, start[i]);
    gsl_vector_set(step, i, 0.5);
  }
  gsl_multimin_function fn{&negative_lml, 3, const_cast<Objective*>(&obj)};
  gsl_multimin_fminimizer_set(solver, &fn, x0, step);
  for (int it = 0; it < 400; ++it) {
    if (gsl_multimin_fminimizer_iterate(solver) != GSL_SUCCESS) break;
    if (gsl_multimin_test_size(gsl_multimin_fminimizer_size(solver), 1e-5) == GSL_SUCCESS) break;
  }
  std::array<double, 3> best{};
  for (std::size_t i = 0; i < 3; ++i) {
    best[i] = std::clamp(gsl_vector_get(solver->x, i), kLogLower[i], kLogUpper[i]);
  }
  gsl_vector_free(step);
  gsl_vector_free(x0);
  gsl_multimin_fminimizer_free(solver);
  return best;
}

}  // namespace

double matern52(double distance, double lengthscale, double variance) {
  const double r = std::sqrt(5.0) * std::abs(distance) / lengthscale;
  return variance * (1.0 + r + r * r / 3.0) * std::exp(-r);
}

GpSurrogate::GpSurrogate(std::vector<double> x, std::vector<double> y, GpHyperparameters hyper)
    : x_(std::move(x)), hyper_(hyper) {
  if (x_.size() != y.size()) throw std::invalid_argument("GP inputs and targets differ in length");
  if (x_.empty()) throw std::invalid_argument("GP needs training data");
  if (!(hyper.lengthscale > 0.0) || !(hyper.signal_variance > 0.0) || hyper.noise_variance < 0.0) {
    throw std::invalid_argument("invalid GP hyperparameters");
  }
  const auto n = static_cast<Eigen::Index>(x_.size());
  Eigen::VectorXd targets(n);
  prior_mean_ = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) prior_mean_ += y[static_cast<std::size_t>(i)];
  prior_mean_ /= static_cast<double>(n);
  for (Eigen::Index i = 0; i < n; ++i) targets[i] = y[static_cast<std::size_t>(i)] - prior_mean_;

  Eigen::MatrixXd gram(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      gram(i, j) = gram(j, i) = matern52(x_[static_cast<std::size_t>(i)] - x_[static_cast<std::size_t>(j)],
                                         hyper_.lengthscale, hyper_.signal_variance);
    }
  }
  gram.diagonal().array() += hyper_.noise_variance + kJitter;
  chol_.compute(gram);
  if (chol_.info() != Eigen::Success) {
    log_marginal_ = -std::numeric_limits<double>::infinity();
    alpha_ = Eigen::VectorXd::Zero(n);
    return;
  }
  alpha_ = chol_.solve(targets);
  const double log_det = 2.0 * chol_.matrixLLT().diagonal().array().log().sum();
  log_marginal_ = -0.5 * targets.dot(alpha_) - 0.5 * log_det -
                  0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);
}

GpSurrogate::Prediction GpSurrogate::predict(double x) const {
  const auto n = static_cast<Eigen::Index>(x_.size());
  Eigen::VectorXd k(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    k[i] = matern52(x - x_[static_cast<std::size_t>(i)], hyper_.lengthscale, hyper_.signal_variance);
  }
  const double mean = prior_mean_ + k.dot(alpha_);
  const Eigen::VectorXd v = chol_.matrixL().solve(k);
  const double var = std::max(0.0, hyper_.signal_variance - v.squaredNorm());
  return {mean, std::sqrt(var)};
}

GpFit fit_gp_detailed(std::span<const double> x, std::span<const double> y, std::uint64_t seed,
                      std::size_t starts) {
  if (x.size() != y.size()) throw std::invalid_argument("GP inputs and targets differ in length");
  if (x.size() < 2) throw std::invalid_argument("GP fit needs at least two points");
  if (std::all_of(x.begin(), x.end(), [&](double v) { return v == x.front(); })) {
    throw std::invalid_argument("GP fit needs at least two distinct locations");
  }
  const std::vector<double> xs(x.begin(), x.end());
  const std::vector<double> ys(y.begin(), y.end());
  const Objective obj{&xs, &ys};
  gsl_set_error_handler_off();

  Rng rng(seed);
  std::vector<GpHyperparameters> start_points;
  std::vector<double> start_lml;
  std::array<double, 3> best{};
  double best_value = std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s < starts; ++s) {
    std::array<double, 3> start{};
    for (std::size_t i = 0; i < 3; ++i) {
      start[i] = kLogLower[i] + (kLogUpper[i] - kLogLower[i]) * uniform01(rng);
    }
    const GpSurrogate at_start(xs, ys, from_log(start));
    start_points.push_back(at_start.hyperparameters());
    start_lml.push_back(at_start.log_marginal_likelihood());

    auto found = nelder_mead(obj, start);
    const GpSurrogate at_found(xs, ys, from_log(found));
    // Nelder-Mead never returns worse than its start vertex; keep the start if it does.
    double value = -at_found.log_marginal_likelihood();
    if (!(value <= -at_start.log_marginal_likelihood())) {
      found = start;
      value = -at_start.log_marginal_likelihood();
    }
    if (value < best_value) {
      best_value = value;
      best = found;
    }
  }
  return {GpSurrogate(xs, ys, from_log(best)), std::move(start_points), std::move(start_lml)};
}

GpSurrogate fit_gp(std::span<const double> x, std::span<const double> y, std::uint64_t seed) {
  return fit_gp_detailed(x, y, seed).surrogate;
}

double expected_improvement(double mean, double sd, double best) {
  const double delta = best - mean;
  if (!(sd > 0.0)) return std::max(0.0, delta);
  const double z = delta / sd;
  const double cdf = 0.5 * std::erfc(-z / std::numbers::sqrt2);
  const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
  return std::max(0.0, delta * cdf + sd * pdf);
}

double expected_improvement(const GpSurrogate& surrogate, double x, double best) {
  const auto pred = surrogate.predict(x);
  return expected_improvement(pred.mean, pred.sd, best);
}

OptimizationState run_gp_optimization(const FieldOracle& oracle, Dataset initial,
                                      const GpOptimizationConfig& config, Rng& rng) {
  if (initial.empty()) throw std::invalid_argument("initial dataset is empty");
  const std::vector<double> grid = candidate_grid(config.candidates);
  OptimizationState state;
  state.dataset = std::move(initial);

  auto fit_and_record = [&](std::size_t step) {
    std::vector<double> xs;
    std::vector<double> ys;
    for (const auto& o : state.dataset.observations()) {
      xs.push_back(o.x);
      ys.push_back(o.t);
    }
    const GpSurrogate gp = fit_gp(xs, ys, rng());
    std::vector<GpSurrogate::Prediction> preds;
    preds.reserve(grid.size());
    for (double x : grid) preds.push_back(gp.predict(x));
    const auto best_it = std::min_element(preds.begin(), preds.end(),
                                          [](const auto& a, const auto& b) { return a.mean < b.mean; });
    StepRecord rec;
    rec.step = step;
    rec.chosen_x = std::numeric_limits<double>::quiet_NaN();
    rec.estimated_minimizer = grid[static_cast<std::size_t>(best_it - preds.begin())];
    rec.gap = optimality_gap(oracle, grid, rec.estimated_minimizer);
    if (config.strategy == Strategy::adaptive) {
      rec.criterion.reserve(grid.size());
      for (const auto& p : preds) rec.criterion.push_back(expected_improvement(p.mean, p.sd, best_it->mean));
    }
    return rec;
  };

  StepRecord current = fit_and_record(0);
  state.initial = current;
  for (std::size_t step = 1; step <= config.steps; ++step) {
    double x_next = 0.0;
    std::vector<double> criterion;
    if (config.strategy == Strategy::adaptive) {
      const auto& ei = current.criterion;
      x_next = grid[static_cast<std::size_t>(std::max_element(ei.begin(), ei.end()) - ei.begin())];
      criterion = ei;
    } else {
      x_next = uniform01(rng);
    }
    state.dataset.add_batch(x_next, oracle.sample(x_next, config.batch_size, rng));
    current = fit_and_record(step);
    StepRecord rec = current;
    rec.chosen_x = x_next;
    rec.criterion = std::move(criterion);
    state.history.push_back(std::move(rec));
  }
  return state;
}

}  // namespace slgp
