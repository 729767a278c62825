#include <doctest.h>

#include <cmath>
#include <vector>

#include "slgp/functionals.hpp"
#include "slgp/reference_fields.hpp"

using namespace slgp;

namespace {

GridPtr unit_grid(std::size_t n = 101) {
  return std::make_shared<const QuadratureGrid>(QuadratureGrid::regular(n));
}

PosteriorEnsemble random_ensemble(const Model& model, std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  PosteriorEnsemble e;
  e.draws.resize(static_cast<Eigen::Index>(model.rank()), static_cast<Eigen::Index>(n));
  for (std::size_t j = 0; j < n; ++j) {
    e.draws.col(static_cast<Eigen::Index>(j)) = 1.5 * standard_normal(e.draws.rows(), rng);
  }
  return e;
}

}  // namespace

TEST_CASE("quantiles of simple grid densities") {
  const GridPtr g = unit_grid();
  const DensityGrid uniform{g, Eigen::VectorXd::Ones(101)};
  CHECK(apply_functional(uniform, Functional::median()) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(apply_functional(uniform, {0.25}) == doctest::Approx(0.25).epsilon(1e-12));

  // all mass in one cell: the quantile stays inside it
  Eigen::VectorXd spike = Eigen::VectorXd::Zero(101);
  spike[37] = 1.0;
  const double q = apply_functional({g, spike / g->integrate(spike)}, Functional::median());
  CHECK(std::abs(q - 0.37) <= 0.01);

  // truncated Gaussian reference: median at f1(x) within one cell
  const DensityGrid tg = reference_density(ReferenceField{}, 0.62, g);
  CHECK(std::abs(apply_functional(tg, Functional::median()) - f1(0.62)) <= 0.01);

  // linear density 2t has CDF t^2; the interpolated grid CDF matches to O(h^2)
  const GridPtr fine = unit_grid(1001);
  const DensityGrid ramp{fine, 2.0 * fine->nodes()};
  for (double tau : {0.1, 0.5, 0.9}) {
    CHECK(apply_functional(ramp, {tau}) == doctest::Approx(std::sqrt(tau)).epsilon(1e-3));
  }

  CHECK_THROWS_AS(apply_functional(uniform, {0.0}), std::invalid_argument);
  CHECK_THROWS_AS(apply_functional(uniform, {1.0}), std::invalid_argument);
}

TEST_CASE("apply_functional is monotone in the level") {
  const Model model(build_fourier_basis(3));
  Rng rng(4);
  for (int rep = 0; rep < 20; ++rep) {
    const DensityGrid d = slgp_density(model, 2.0 * standard_normal(42, rng), uniform01(rng));
    double prev = 0.0;
    for (double tau = 0.05; tau < 0.99; tau += 0.05) {
      const double q = apply_functional(d, {tau});
      CHECK(q >= prev);
      CHECK(q >= 0.0);
      CHECK(q <= 1.0);
      prev = q;
    }
  }
}

TEST_CASE("functional_ensemble evaluates every draw") {
  const Model model(build_fourier_basis(2));
  const PosteriorEnsemble e = random_ensemble(model, 5, 9);
  const Eigen::VectorXd g = functional_ensemble(e, model, 0.3, Functional::median());
  REQUIRE(g.size() == 5);
  for (std::size_t j = 0; j < 5; ++j) {
    CHECK(g[static_cast<Eigen::Index>(j)] ==
          doctest::Approx(apply_functional(slgp_density(model, e.draw(j), 0.3), Functional::median()))
              .epsilon(1e-12));
  }
  PosteriorEnsemble same;
  same.draws = e.draws.col(0).replicate(1, 4);
  const Eigen::VectorXd c = functional_ensemble(same, model, 0.3, Functional::median());
  CHECK((c.array() == c[0]).all());
  const std::vector<double> xs{0.0, 0.5, 1.0};
  const Eigen::MatrixXd m = functional_matrix(e, model, xs, {0.7});
  CHECK(m.rows() == 5);
  CHECK(m.cols() == 3);
  CHECK(m.minCoeff() >= 0.0);
  CHECK(m.maxCoeff() <= 1.0);
}

TEST_CASE("weighted quantile convention") {
  const std::vector<double> v{0.4, 0.1, 0.3, 0.2};
  const std::vector<double> w{0.25, 0.25, 0.25, 0.25};
  CHECK(weighted_quantile(v, w, 0.25) == 0.1);
  CHECK(weighted_quantile(v, w, 0.26) == 0.2);
  CHECK(weighted_quantile(v, w, 0.5) == 0.2);
  CHECK(weighted_quantile(v, w, 1.0) == 0.4);
  const std::vector<double> point{0.0, 0.0, 1.0, 0.0};
  for (double a : {0.01, 0.5, 0.99}) CHECK(weighted_quantile(v, point, a) == 0.3);
  CHECK_THROWS_AS(weighted_quantile({}, {}, 0.5), std::invalid_argument);
}

TEST_CASE("posterior quantile curves") {
  const Model model(build_fourier_basis(2));
  const std::vector<double> xs{0.0, 0.2, 0.45, 0.8, 1.0};
  const PosteriorEnsemble e = random_ensemble(model, 12, 21);
  const Eigen::MatrixXd g = functional_matrix(e, model, xs, Functional::median());

  SUBCASE("single atom") {
    PosteriorEnsemble one;
    one.draws = e.draws.col(3);
    for (double a : {0.1, 0.5, 0.9}) {
      const auto curve = posterior_quantile_curve(one, model, xs, Functional::median(), a);
      for (std::size_t i = 0; i < xs.size(); ++i) CHECK(curve.values[i] == g(3, static_cast<Eigen::Index>(i)));
    }
  }
  SUBCASE("alpha = 1 is the per-x maximum") {
    const auto curve = posterior_quantile_curve(e, model, xs, Functional::median(), 1.0);
    for (std::size_t i = 0; i < xs.size(); ++i) CHECK(curve.values[i] == g.col(static_cast<Eigen::Index>(i)).maxCoeff());
  }
  SUBCASE("explicit uniform weights match the default") {
    const std::vector<double> w(12, 1.0 / 12.0);
    const auto a = posterior_quantile_curve(e, model, xs, Functional::median(), 0.9);
    const auto b = posterior_quantile_curve(e, model, xs, Functional::median(), 0.9, w);
    CHECK(a.values == b.values);
    CHECK(a.x_grid == xs);
    CHECK(a.values[a.argmin()] == a.min());
  }
  SUBCASE("monotone in alpha for fixed weights") {
    Rng rng(2);
    std::vector<double> w(12);
    double total = 0.0;
    for (auto& v : w) total += (v = uniform01(rng));
    for (auto& v : w) v /= total;
    std::vector<double> prev(xs.size(), 0.0);
    for (double a = 0.05; a <= 1.0; a += 0.05) {
      const auto c = posterior_quantile_curve(e, model, xs, Functional::median(), a, w);
      for (std::size_t i = 0; i < xs.size(); ++i) {
        CHECK(c.values[i] >= prev[i]);
        prev[i] = c.values[i];
      }
    }
  }
  SUBCASE("weights must sum to one") {
    std::vector<double> w(12, 1.0 / 12.0);
    w[0] += 1e-6;
    CHECK_THROWS_AS(posterior_quantile_curve(e, model, xs, Functional::median(), 0.9, w),
                    std::invalid_argument);
    w[0] = -1.0 / 12.0;
    CHECK_THROWS_AS(posterior_quantile_curve(e, model, xs, Functional::median(), 0.9, w),
                    std::invalid_argument);
  }
}

TEST_CASE("integrated squared Hellinger distance") {
  const GridPtr g = unit_grid();
  std::vector<double> xs;
  for (int i = 0; i <= 20; ++i) xs.push_back(i / 20.0);
  const auto tg = reference_field_grid(ReferenceField{FieldKind::truncated_gaussian}, xs, g);
  const auto mm = reference_field_grid(ReferenceField{FieldKind::multimodal}, xs, g);
  CHECK(ish_distance(tg, tg, xs) == 0.0);
  const double d = ish_distance(tg, mm, xs);
  CHECK(d == ish_distance(mm, tg, xs));
  CHECK(d > 0.0);
  CHECK(d <= 2.0);

  // disjoint supports: mass on [0, 0.25] versus [0.75, 1] at every x
  Eigen::VectorXd lo = Eigen::VectorXd::Zero(101), hi = Eigen::VectorXd::Zero(101);
  lo.head(26).setOnes();
  hi.tail(26).setOnes();
  const std::vector<DensityGrid> a(xs.size(), {g, lo / g->integrate(lo)});
  const std::vector<DensityGrid> b(xs.size(), {g, hi / g->integrate(hi)});
  CHECK(ish_distance(a, b, xs) == doctest::Approx(2.0).epsilon(1e-12));

  // random SLGP fields stay within [0, 2]
  const Model model(build_fourier_basis(3));
  Rng rng(6);
  for (int rep = 0; rep < 20; ++rep) {
    const Eigen::VectorXd e1 = 3.0 * standard_normal(42, rng);
    const Eigen::VectorXd e2 = 3.0 * standard_normal(42, rng);
    std::vector<DensityGrid> f, h;
    for (double x : xs) {
      f.push_back(slgp_density(model, e1, x));
      h.push_back(slgp_density(model, e2, x));
    }
    const double v = ish_distance(f, h, xs);
    CHECK(v >= 0.0);
    CHECK(v <= 2.0);
  }

  const std::vector<DensityGrid> coarse(xs.size(), {unit_grid(51), Eigen::VectorXd::Ones(51)});
  CHECK_THROWS_AS(ish_distance(tg, coarse, xs), std::invalid_argument);
  CHECK_THROWS_AS(ish_distance(tg, std::span<const DensityGrid>(mm).first(3), xs), std::invalid_argument);
}
