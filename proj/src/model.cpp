#include "slgp/model.hpp"

#include <cmath>
#include <map>
#include <numbers>
#include <stdexcept>
#include <string>

namespace slgp {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void check_unit(double v, const char* what) {
  if (!(v >= 0.0 && v <= 1.0)) {
    throw std::invalid_argument(std::string(what) + " must lie in [0, 1], got " + std::to_string(v));
  }
}

}  // namespace

Dataset::Dataset(std::vector<Observation> obs) : obs_(std::move(obs)) {
  for (const auto& o : obs_) {
    check_unit(o.x, "x");
    check_unit(o.t, "t");
  }
}

void Dataset::add(double x, double t) {
  check_unit(x, "x");
  check_unit(t, "t");
  obs_.push_back({x, t});
}

void Dataset::add_batch(double x, std::span<const double> ts) {
  for (double t : ts) add(x, t);
}

Model::Model(BasisSet basis, std::size_t grid_size, MeanFunction mean)
    : Model(std::move(basis), QuadratureGrid::regular(grid_size), std::move(mean)) {}

Model::Model(BasisSet basis, QuadratureGrid t_grid, MeanFunction mean)
    : basis_(std::move(basis)),
      t_grid_(std::make_shared<const QuadratureGrid>(std::move(t_grid))),
      mean_(std::move(mean)) {
  if (t_grid_->lower() != 0.0 || t_grid_->upper() != 1.0) {
    throw std::invalid_argument("response grid must span [0, 1]");
  }
  const int q = basis_.order();
  const auto g = static_cast<Eigen::Index>(t_grid_->size());
  trig_table_.resize(2 * q, g);
  for (Eigen::Index k = 0; k < g; ++k) {
    const double t = t_grid_->nodes()[k];
    for (int w = 1; w <= q; ++w) {
      trig_table_(w - 1, k) = std::cos(kTwoPi * w * t);
      trig_table_(q + w - 1, k) = std::sin(kTwoPi * w * t);
    }
  }
}

Eigen::MatrixXd Model::slice_map(double x) const {
  const int q = basis_.order();
  Eigen::VectorXd cos_x(2 * q + 1);
  Eigen::VectorXd sin_x(2 * q + 1);
  for (int w = -q; w <= q; ++w) {
    cos_x[w + q] = std::cos(kTwoPi * w * x);
    sin_x[w + q] = std::sin(kTwoPi * w * x);
  }
  Eigen::MatrixXd map = Eigen::MatrixXd::Zero(2 * q, static_cast<Eigen::Index>(rank()));
  for (std::size_t j = 0; j < rank(); ++j) {
    const auto& f = basis_[j];
    const auto col = static_cast<Eigen::Index>(j);
    const double cb = cos_x[f.freq.omega_x + q];
    const double sb = sin_x[f.freq.omega_x + q];
    const int a_row = f.freq.omega_t - 1;
    const int b_row = q + f.freq.omega_t - 1;
    if (f.kind == BasisKind::cosine) {
      map(a_row, col) = f.weight * cb;
      map(b_row, col) = -f.weight * sb;
    } else {
      map(a_row, col) = f.weight * sb;
      map(b_row, col) = f.weight * cb;
    }
  }
  return map;
}

Eigen::VectorXd Model::trig_at(double t) const {
  const int q = basis_.order();
  Eigen::VectorXd out(2 * q);
  for (int w = 1; w <= q; ++w) {
    out[w - 1] = std::cos(kTwoPi * w * t);
    out[q + w - 1] = std::sin(kTwoPi * w * t);
  }
  return out;
}

Eigen::VectorXd Model::mean_on_grid(double x) const {
  const auto g = static_cast<Eigen::Index>(grid_size());
  Eigen::VectorXd out = Eigen::VectorXd::Zero(g);
  if (mean_) {
    for (Eigen::Index k = 0; k < g; ++k) out[k] = mean_(x, t_grid_->nodes()[k]);
  }
  return out;
}

void Model::check_coefficients(const CoefficientVector& eps) const {
  if (static_cast<std::size_t>(eps.size()) != rank()) {
    throw std::invalid_argument("coefficient vector has length " + std::to_string(eps.size()) +
                                ", basis rank is " + std::to_string(rank()));
  }
}

FieldSlice make_slice(const Model& model, const CoefficientVector& eps, double x) {
  model.check_coefficients(eps);
  check_unit(x, "x");
  FieldSlice s;
  s.x = x;
  s.coefficients = model.slice_map(x) * eps;
  Eigen::VectorXd w = model.trig_table().transpose() * s.coefficients;
  if (model.has_mean()) w += model.mean_on_grid(x);
  s.log_normalizer = log_weighted_sum_exp(w, model.t_grid()->weights());
  s.log_density = w.array() - s.log_normalizer;
  return s;
}

double slice_log_density(const Model& model, const FieldSlice& slice, double t) {
  check_unit(t, "t");
  return model.trig_at(t).dot(slice.coefficients) + model.mean_at(slice.x, t) -
         slice.log_normalizer;
}

Eigen::VectorXd gp_eval(const Model& model, const CoefficientVector& eps, double x) {
  model.check_coefficients(eps);
  check_unit(x, "x");
  Eigen::VectorXd w = model.trig_table().transpose() * (model.slice_map(x) * eps);
  if (model.has_mean()) w += model.mean_on_grid(x);
  return w;
}

DensityGrid slgp_density(const Model& model, const CoefficientVector& eps, double x) {
  const Eigen::VectorXd w = gp_eval(model, eps, x);
  const double shift = w.maxCoeff();
  Eigen::VectorXd values = (w.array() - shift).exp().matrix();
  values /= model.t_grid()->integrate(values);
  return {model.t_grid(), std::move(values)};
}

double log_density_at(const Model& model, const CoefficientVector& eps, double x, double t) {
  check_unit(t, "t");
  const FieldSlice s = make_slice(model, eps, x);
  const double w = model.basis().weights().cwiseProduct(eval_basis(model.basis(), x, t)).dot(eps) +
                   model.mean_at(x, t);
  return w - s.log_normalizer;
}

double log_likelihood(const Model& model, const CoefficientVector& eps, const Dataset& data) {
  model.check_coefficients(eps);
  if (data.empty()) return 0.0;
  return LikelihoodTerm(model, data)(eps);
}

double log_posterior(const Model& model, const CoefficientVector& eps, const Dataset& data) {
  return -0.5 * eps.squaredNorm() + log_likelihood(model, eps, data);
}

LikelihoodTerm::LikelihoodTerm(const Model& model, const Dataset& data)
    : twice_q_(2 * model.basis().order()),
      n_obs_(data.size()),
      trig_table_(model.trig_table()),
      quad_weights_(model.t_grid()->weights()) {
  std::map<double, Eigen::Index> index;
  std::vector<double> xs;
  for (const auto& o : data.observations()) {
    if (index.emplace(o.x, static_cast<Eigen::Index>(xs.size())).second) xs.push_back(o.x);
  }
  const auto n_loc = static_cast<Eigen::Index>(xs.size());
  const auto p = static_cast<Eigen::Index>(model.rank());
  maps_.resize(twice_q_ * n_loc, p);
  trig_sums_ = Eigen::MatrixXd::Zero(twice_q_, n_loc);
  counts_ = Eigen::VectorXd::Zero(n_loc);
  for (Eigen::Index l = 0; l < n_loc; ++l) {
    maps_.middleRows(twice_q_ * l, twice_q_) = model.slice_map(xs[static_cast<std::size_t>(l)]);
  }
  for (const auto& o : data.observations()) {
    const Eigen::Index l = index.at(o.x);
    trig_sums_.col(l) += model.trig_at(o.t);
    counts_[l] += 1.0;
    mean_data_ += model.mean_at(o.x, o.t);
  }
  if (model.has_mean()) {
    mean_grid_.resize(static_cast<Eigen::Index>(model.grid_size()), n_loc);
    for (Eigen::Index l = 0; l < n_loc; ++l) {
      mean_grid_.col(l) = model.mean_on_grid(xs[static_cast<std::size_t>(l)]);
    }
  }
}

void LikelihoodTerm::evaluate(const CoefficientVector& eps, Eigen::MatrixXd& coeffs,
                              Eigen::MatrixXd& field, Eigen::VectorXd& log_norm) const {
  if (eps.size() != maps_.cols()) {
    throw std::invalid_argument("coefficient vector length does not match basis rank");
  }
  const Eigen::Index n_loc = counts_.size();
  const Eigen::VectorXd stacked = maps_ * eps;
  coeffs = Eigen::Map<const Eigen::MatrixXd>(stacked.data(), twice_q_, n_loc);
  field.noalias() = trig_table_.transpose() * coeffs;
  if (mean_grid_.size() > 0) field += mean_grid_;
  log_norm.resize(n_loc);
  for (Eigen::Index l = 0; l < n_loc; ++l) {
    log_norm[l] = log_weighted_sum_exp(field.col(l), quad_weights_);
  }
}

double LikelihoodTerm::operator()(const CoefficientVector& eps) const {
  if (n_obs_ == 0) return 0.0;
  Eigen::MatrixXd coeffs;
  Eigen::MatrixXd field;
  Eigen::VectorXd log_norm;
  evaluate(eps, coeffs, field, log_norm);
  return trig_sums_.cwiseProduct(coeffs).sum() + mean_data_ - counts_.dot(log_norm);
}

double LikelihoodTerm::value_and_gradient(const CoefficientVector& eps,
                                          Eigen::VectorXd& gradient) const {
  if (n_obs_ == 0) {
    gradient = Eigen::VectorXd::Zero(maps_.cols());
    return 0.0;
  }
  Eigen::MatrixXd coeffs;
  Eigen::MatrixXd field;
  Eigen::VectorXd log_norm;
  evaluate(eps, coeffs, field, log_norm);
  const Eigen::Index n_loc = counts_.size();
  Eigen::MatrixXd residual = trig_sums_;
  for (Eigen::Index l = 0; l < n_loc; ++l) {
    const Eigen::VectorXd prob =
        quad_weights_.cwiseProduct((field.col(l).array() - log_norm[l]).exp().matrix());
    residual.col(l) -= counts_[l] * (trig_table_ * prob);
  }
  gradient = maps_.transpose() * Eigen::Map<const Eigen::VectorXd>(residual.data(), residual.size());
  return trig_sums_.cwiseProduct(coeffs).sum() + mean_data_ - counts_.dot(log_norm);
}

Eigen::MatrixXd LikelihoodTerm::information(const CoefficientVector& eps) const {
  const Eigen::Index p = maps_.cols();
  Eigen::MatrixXd info = Eigen::MatrixXd::Zero(p, p);
  if (n_obs_ == 0) return info;
  Eigen::MatrixXd coeffs;
  Eigen::MatrixXd field;
  Eigen::VectorXd log_norm;
  evaluate(eps, coeffs, field, log_norm);
  for (Eigen::Index l = 0; l < counts_.size(); ++l) {
    const Eigen::VectorXd prob =
        quad_weights_.cwiseProduct((field.col(l).array() - log_norm[l]).exp().matrix());
    const Eigen::VectorXd mu = trig_table_ * prob;
    Eigen::MatrixXd cov = trig_table_ * prob.asDiagonal() * trig_table_.transpose();
    cov -= mu * mu.transpose();
    const auto map = maps_.middleRows(twice_q_ * l, twice_q_);
    info.noalias() += counts_[l] * (map.transpose() * cov * map);
  }
  return info;
}

}  // namespace slgp
