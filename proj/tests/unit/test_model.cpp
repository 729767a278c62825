#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "slgp/model.hpp"
#include "slgp/random.hpp"

using namespace slgp;

namespace {

Dataset random_dataset(std::size_t n, Rng& rng, std::size_t distinct_x = 0) {
  Dataset d;
  std::vector<double> xs;
  for (std::size_t i = 0; i < (distinct_x ? distinct_x : n); ++i) xs.push_back(uniform01(rng));
  for (std::size_t i = 0; i < n; ++i) d.add(xs[i % xs.size()], uniform01(rng));
  return d;
}

}  // namespace

TEST_CASE("gp_eval: zero, unit and random coefficient vectors") {
  const Model model(build_fourier_basis(3));
  const auto& grid = *model.t_grid();
  const auto p = static_cast<Eigen::Index>(model.rank());
  CHECK(gp_eval(model, Eigen::VectorXd::Zero(p), 0.4).cwiseAbs().maxCoeff() == 0.0);

  for (Eigen::Index j : {Eigen::Index{0}, Eigen::Index{7}, p - 1}) {
    const Eigen::VectorXd w = gp_eval(model, Eigen::VectorXd::Unit(p, j), 0.37);
    const auto& f = model.basis()[static_cast<std::size_t>(j)];
    for (std::size_t k = 0; k < grid.size(); ++k) {
      CHECK(w[static_cast<Eigen::Index>(k)] == doctest::Approx(f.weight * f(0.37, grid.node(k))).epsilon(1e-12));
    }
  }

  Rng rng(3);
  for (int rep = 0; rep < 5; ++rep) {
    const Eigen::VectorXd eps = 2.0 * standard_normal(p, rng);
    const double x = uniform01(rng);
    const Eigen::VectorXd w = gp_eval(model, eps, x);
    for (std::size_t k = 0; k < grid.size(); ++k) {
      CHECK(std::abs(w[static_cast<Eigen::Index>(k)] - oracle::field(model.basis(), eps, x, grid.node(k))) < 1e-12);
    }
  }
  CHECK_THROWS_AS(gp_eval(model, Eigen::VectorXd::Zero(p + 1), 0.4), std::invalid_argument);
}

TEST_CASE("slgp_density: uniform at zero, invariant to constant mean shifts") {
  const BasisSet basis = build_fourier_basis(2);
  const Model flat(basis);
  const auto p = static_cast<Eigen::Index>(flat.rank());
  const DensityGrid u = slgp_density(flat, Eigen::VectorXd::Zero(p), 0.5);
  CHECK((u.values.array() - 1.0).abs().maxCoeff() < 1e-14);

  Rng rng(5);
  const Eigen::VectorXd eps = standard_normal(p, rng);
  const Model shifted(basis, 101, [](double, double) { return 3.7; });
  const auto a = slgp_density(flat, eps, 0.21).values;
  const auto b = slgp_density(shifted, eps, 0.21).values;
  CHECK((a - b).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("slgp_density with one active cosine matches a refined-grid oracle") {
  const Model model(build_fourier_basis(2));
  const auto p = static_cast<Eigen::Index>(model.rank());
  const Eigen::VectorXd eps = 2.5 * Eigen::VectorXd::Unit(p, 0);
  const double x = 0.3;
  const DensityGrid d = slgp_density(model, eps, x);
  const double log_z_fine = oracle::log_normalizer(model.basis(), eps, x, 201);
  for (std::size_t k = 0; k < model.grid_size(); k += 10) {
    const double t = model.t_grid()->node(k);
    const double expected = std::exp(oracle::field(model.basis(), eps, x, t) - log_z_fine);
    CHECK(d.values[static_cast<Eigen::Index>(k)] == doctest::Approx(expected).epsilon(1e-6));
  }
}

TEST_CASE("log_density_at agrees with the grid density and the refined oracle") {
  const Model model(build_fourier_basis(3));
  const auto p = static_cast<Eigen::Index>(model.rank());
  CHECK(log_density_at(model, Eigen::VectorXd::Zero(p), 0.1, 0.77) == doctest::Approx(0.0));

  Rng rng(9);
  const Eigen::VectorXd eps = standard_normal(p, rng);
  const DensityGrid d = slgp_density(model, eps, 0.6);
  for (std::size_t k : {0u, 13u, 50u, 100u}) {
    CHECK(std::abs(log_density_at(model, eps, 0.6, model.t_grid()->node(k)) -
                   std::log(d.values[static_cast<Eigen::Index>(k)])) < 1e-12);
  }
  const double fine = oracle::log_density(model.basis(), eps, 0.6, 0.5, 2001);
  CHECK(log_density_at(model, eps, 0.6, 0.5) == doctest::Approx(fine).epsilon(1e-6));
  CHECK_THROWS_AS(log_density_at(model, eps, 0.6, 1.5), std::invalid_argument);
}

TEST_CASE("log_likelihood: empty, flat and additive") {
  const Model model(build_fourier_basis(2));
  const auto p = static_cast<Eigen::Index>(model.rank());
  Rng rng(21);
  const Eigen::VectorXd eps = standard_normal(p, rng);
  CHECK(log_likelihood(model, eps, Dataset{}) == 0.0);
  const Dataset data = random_dataset(12, rng);
  CHECK(std::abs(log_likelihood(model, Eigen::VectorXd::Zero(p), data)) < 1e-12);

  Dataset two;
  two.add(0.2, 0.3);
  two.add(0.8, 0.9);
  CHECK(log_likelihood(model, eps, two) ==
        doctest::Approx(log_density_at(model, eps, 0.2, 0.3) + log_density_at(model, eps, 0.8, 0.9)));
}

TEST_CASE("likelihood term matches direct summation, with and without repeated x and a mean") {
  const BasisSet basis = build_fourier_basis(3);
  const MeanFunction mean = [](double x, double t) { return std::sin(3 * x) + 2.0 * t; };
  for (const Model& model : {Model(basis), Model(basis, 101, mean)}) {
    const auto p = static_cast<Eigen::Index>(model.rank());
    Rng rng(31);
    const Dataset data = random_dataset(40, rng, 7);
    const Eigen::VectorXd eps = 1.5 * standard_normal(p, rng);
    double direct = 0.0;
    for (const auto& o : data.observations()) {
      direct += oracle::log_density(basis, eps, o.x, o.t, model.grid_size(),
                                    model.has_mean() ? mean : MeanFunction{});
    }
    const LikelihoodTerm term(model, data);
    CHECK(term.locations() == 7);
    CHECK(term(eps) == doctest::Approx(direct).epsilon(1e-11));
  }
}

TEST_CASE("likelihood gradient and information match finite differences") {
  const Model model(build_fourier_basis(2));
  const auto p = static_cast<Eigen::Index>(model.rank());
  Rng rng(41);
  const Dataset data = random_dataset(30, rng, 10);
  const LikelihoodTerm term(model, data);
  const Eigen::VectorXd eps = standard_normal(p, rng);
  Eigen::VectorXd grad;
  const double value = term.value_and_gradient(eps, grad);
  CHECK(value == doctest::Approx(term(eps)));
  const double h = 1e-6;
  Eigen::MatrixXd hess_fd(p, p);
  for (Eigen::Index j = 0; j < p; ++j) {
    const Eigen::VectorXd e = Eigen::VectorXd::Unit(p, j) * h;
    const double fd = (term(eps + e) - term(eps - e)) / (2 * h);
    CHECK(grad[j] == doctest::Approx(fd).epsilon(1e-6));
    Eigen::VectorXd gp, gm;
    term.value_and_gradient(eps + e, gp);
    term.value_and_gradient(eps - e, gm);
    hess_fd.col(j) = (gp - gm) / (2 * h);
  }
  const Eigen::MatrixXd info = term.information(eps);
  CHECK((info + hess_fd).cwiseAbs().maxCoeff() < 1e-5 * (1.0 + info.cwiseAbs().maxCoeff()));
}

TEST_CASE("log_posterior adds the Gaussian prior") {
  const Model model(build_fourier_basis(1));
  Rng rng(51);
  const Eigen::VectorXd eps = standard_normal(6, rng);
  CHECK(log_posterior(model, eps, Dataset{}) == doctest::Approx(-0.5 * eps.squaredNorm()));
  const Dataset data = random_dataset(5, rng);
  CHECK(log_posterior(model, Eigen::VectorXd::Zero(6), data) ==
        doctest::Approx(log_likelihood(model, Eigen::VectorXd::Zero(6), data)));
  CHECK(log_posterior(model, 2.0 * eps, Dataset{}) < log_posterior(model, eps, Dataset{}));
}

TEST_CASE("density invariants over 1000 random (eps, x)") {
  const Model model(build_fourier_basis(3));
  const Model shifted(build_fourier_basis(3), 101, [](double, double) { return -12.5; });
  const auto p = static_cast<Eigen::Index>(model.rank());
  Rng rng(61);
  double worst_norm = 0.0;
  double worst_shift = 0.0;
  double min_value = 1.0;
  for (int rep = 0; rep < 1000; ++rep) {
    const Eigen::VectorXd eps = 2.0 * standard_normal(p, rng);
    const double x = uniform01(rng);
    const DensityGrid d = slgp_density(model, eps, x);
    worst_norm = std::max(worst_norm, std::abs(d.integral() - 1.0));
    min_value = std::min(min_value, d.values.minCoeff());
    worst_shift = std::max(worst_shift,
                           (slgp_density(shifted, eps, x).values - d.values).cwiseAbs().maxCoeff());
  }
  CHECK(worst_norm < 1e-9);
  CHECK(min_value > 0.0);
  CHECK(worst_shift < 1e-12);
}

TEST_CASE("trapezoid refinement converges at second order on a non-periodic field") {
  // A linear-in-t mean breaks periodicity, so the trapezoidal rule is O(h^2).
  const BasisSet basis = build_fourier_basis(2);
  const MeanFunction mean = [](double, double t) { return 2.0 * t; };
  Rng rng(71);
  const Eigen::VectorXd eps = standard_normal(static_cast<Eigen::Index>(basis.rank()), rng);
  std::vector<double> diffs;
  for (std::size_t g : {21u, 41u, 81u}) {
    const Model coarse(basis, g, mean);
    const Model fine(basis, 2 * g - 1, mean);
    const auto a = slgp_density(coarse, eps, 0.4).values;
    const auto b = slgp_density(fine, eps, 0.4).values;
    double d = 0.0;
    for (Eigen::Index k = 0; k < a.size(); ++k) d = std::max(d, std::abs(a[k] - b[2 * k]));
    diffs.push_back(d);
  }
  for (std::size_t i = 0; i + 1 < diffs.size(); ++i) {
    CHECK(std::log2(diffs[i] / diffs[i + 1]) >= 1.8);
  }
}

TEST_CASE("datasets reject coordinates outside the unit square") {
  Dataset d;
  CHECK_THROWS_AS(d.add(-0.1, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(d.add(0.5, 1.01), std::invalid_argument);
  CHECK_THROWS_AS(Dataset({{0.2, 2.0}}), std::invalid_argument);
  CHECK(d.empty());
}
