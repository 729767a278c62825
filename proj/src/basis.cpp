#include "slgp/basis.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <tuple>

namespace slgp {

namespace {

void check_unit(double v, const char* what) {
  if (!(v >= 0.0 && v <= 1.0)) {
    throw std::invalid_argument(std::string(what) + " must lie in [0, 1]");
  }
}

}  // namespace

std::string_view to_string(BasisKind kind) {
  return kind == BasisKind::cosine ? "cos" : "sin";
}

double BasisFunction::operator()(double x, double t) const {
  const double phase =
      2.0 * std::numbers::pi * (freq.omega_t * t + freq.omega_x * x);
  return kind == BasisKind::cosine ? std::cos(phase) : std::sin(phase);
}

BasisSet::BasisSet(int order, std::vector<BasisFunction> functions)
    : order_(order), functions_(std::move(functions)) {
  if (order_ < 1) throw std::invalid_argument("basis order must be >= 1");
  weights_.resize(static_cast<Eigen::Index>(functions_.size()));
  for (std::size_t j = 0; j < functions_.size(); ++j) {
    const auto& f = functions_[j];
    if (!(f.weight > 0.0)) throw std::invalid_argument("basis weights must be positive");
    if (f.freq.omega_t < 1 || f.freq.omega_t > order_ || std::abs(f.freq.omega_x) > order_) {
      throw std::invalid_argument("basis frequency outside [1, q] x [-q, q]");
    }
    if (j > 0 && f.weight > functions_[j - 1].weight) {
      throw std::invalid_argument("basis weights must be non-increasing");
    }
    weights_[static_cast<Eigen::Index>(j)] = f.weight;
  }
}

BasisSet build_fourier_basis(int order) {
  if (order < 1) throw std::invalid_argument("basis order must be >= 1");
  std::vector<BasisFunction> fns;
  fns.reserve(static_cast<std::size_t>(2 * order * (2 * order + 1)));
  for (int wt = 1; wt <= order; ++wt) {
    for (int wx = -order; wx <= order; ++wx) {
      const double lambda = 1.0 / (1.0 + std::abs(wt) + std::abs(wx));
      for (auto kind : {BasisKind::cosine, BasisKind::sine}) {
        fns.push_back({kind, {wt, wx}, std::sqrt(lambda)});
      }
    }
  }
  std::stable_sort(fns.begin(), fns.end(), [](const BasisFunction& a, const BasisFunction& b) {
    if (a.weight != b.weight) return a.weight > b.weight;
    return std::tuple(a.freq.omega_t, a.freq.omega_x, a.kind) <
           std::tuple(b.freq.omega_t, b.freq.omega_x, b.kind);
  });
  return BasisSet(order, std::move(fns));
}

Eigen::VectorXd eval_basis(const BasisSet& basis, double x, double t) {
  check_unit(x, "x");
  check_unit(t, "t");
  Eigen::VectorXd out(static_cast<Eigen::Index>(basis.rank()));
  for (std::size_t j = 0; j < basis.rank(); ++j) {
    out[static_cast<Eigen::Index>(j)] = basis[j](x, t);
  }
  return out;
}

Eigen::MatrixXd eval_basis_grid(const BasisSet& basis,
                                std::span<const double> x_grid,
                                std::span<const double> t_grid) {
  if (x_grid.empty() || t_grid.empty()) {
    throw std::invalid_argument("basis grid evaluation needs nonempty grids");
  }
  for (double x : x_grid) check_unit(x, "x");
  for (double t : t_grid) check_unit(t, "t");
  const auto p = static_cast<Eigen::Index>(basis.rank());
  const auto nt = t_grid.size();
  Eigen::MatrixXd out(static_cast<Eigen::Index>(x_grid.size() * nt), p);
  for (std::size_t i = 0; i < x_grid.size(); ++i) {
    for (std::size_t k = 0; k < nt; ++k) {
      const auto row = static_cast<Eigen::Index>(i * nt + k);
      for (Eigen::Index j = 0; j < p; ++j) {
        out(row, j) = basis[static_cast<std::size_t>(j)](x_grid[i], t_grid[k]);
      }
    }
  }
  return out;
}

}  // namespace slgp
