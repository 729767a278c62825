#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "slgp/mcmc.hpp"

using namespace slgp;

namespace {

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// Two-sided Kolmogorov-Smirnov statistic against N(0, 1).
double ks_statistic(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const double n = static_cast<double>(v.size());
  double d = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double f = normal_cdf(v[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

Dataset small_dataset() {
  Dataset d;
  for (double x : {0.1, 0.35, 0.6, 0.9}) {
    d.add(x, 0.3 + 0.4 * x);
    d.add(x, 0.25 + 0.5 * x);
  }
  return d;
}

}  // namespace

TEST_CASE("empty data: the chain reproduces the N(0, I) prior") {
  const Model model(build_fourier_basis(1));
  PcnConfig cfg;
  cfg.n_iterations = 11000;
  cfg.burn_in = 1000;
  cfg.thinning = 1;
  cfg.seed = 2024;
  const PosteriorEnsemble e = run_pcn(model, Dataset{}, cfg);
  REQUIRE(e.size() == 10000);
  CHECK(e.acceptance_rate == 1.0);
  const double n = static_cast<double>(e.size());
  // 1% critical value of the one-sample KS statistic, asymptotic form.
  const double ks_crit = 1.628 / std::sqrt(n);
  for (Eigen::Index j = 0; j < e.draws.rows(); ++j) {
    const Eigen::VectorXd row = e.draws.row(j).transpose();
    const double mean = row.mean();
    const double var = (row.array() - mean).square().sum() / (n - 1.0);
    CHECK(std::abs(mean) <= 0.05);
    CHECK(var >= 0.9);
    CHECK(var <= 1.1);
    CHECK(ks_statistic(std::vector<double>(row.data(), row.data() + row.size())) < ks_crit);
  }
}

TEST_CASE("run_pcn is deterministic given the seed and keeps the stated number of draws") {
  const Model model(build_fourier_basis(2));
  const Dataset data = small_dataset();
  PcnConfig cfg;
  cfg.n_iterations = 700;
  cfg.burn_in = 200;
  cfg.thinning = 7;
  cfg.seed = 99;
  const auto a = run_pcn(model, data, cfg);
  const auto b = run_pcn(model, data, cfg);
  CHECK(a.size() == (700u - 200u) / 7u);
  CHECK(a.size() == cfg.retained());
  CHECK(a.draws == b.draws);
  CHECK(a.acceptance_rate == b.acceptance_rate);
  cfg.seed = 100;
  CHECK(run_pcn(model, data, cfg).draws != a.draws);

  // accepted / total is a multiple of 1/n_iterations
  const double scaled = a.acceptance_rate * 700.0;
  CHECK(scaled == doctest::Approx(std::round(scaled)).epsilon(1e-12));
  CHECK(a.acceptance_rate >= 0.0);
  CHECK(a.acceptance_rate <= 1.0);

  const LikelihoodTerm term(model, data);
  for (std::size_t j = 0; j < a.size(); ++j) CHECK(std::isfinite(term(a.draw(j))));
}

TEST_CASE("pcn_step edge cases") {
  const Model model(build_fourier_basis(1));
  Rng rng(5);
  const Eigen::VectorXd cur = standard_normal(6, rng);

  SUBCASE("empty data accepts every proposal") {
    for (int i = 0; i < 200; ++i) {
      CHECK(pcn_step(cur, 0.0, model, Dataset{}, 0.3, rng).accepted);
    }
  }
  SUBCASE("beta = 1 proposes an independent prior draw") {
    Rng a(17), b(17);
    const auto step = pcn_step(cur, 0.0, model, Dataset{}, 1.0, a);
    const Eigen::VectorXd xi = standard_normal(6, b);
    CHECK((step.state - xi).cwiseAbs().maxCoeff() < 1e-15);
  }
  SUBCASE("small beta stays close to the current state and is accepted") {
    const Dataset data = small_dataset();
    const LikelihoodTerm term(model, data);
    const double ll = term(cur);
    int accepted = 0;
    for (int i = 0; i < 100; ++i) {
      const auto step = pcn_step(cur, ll, term, 1e-6, rng);
      accepted += step.accepted;
      CHECK((step.state - cur).norm() < 1e-4);
    }
    CHECK(accepted >= 95);
  }
  SUBCASE("rejections keep the state and its likelihood") {
    const Dataset data = small_dataset();
    const LikelihoodTerm term(model, data);
    // an absurd current log-likelihood forces rejection
    const auto step = pcn_step(cur, 1e300, term, 0.5, rng);
    CHECK_FALSE(step.accepted);
    CHECK(step.state == cur);
    CHECK(step.log_likelihood == 1e300);
  }
  CHECK_THROWS_AS(pcn_step(cur, 0.0, model, Dataset{}, 0.0, rng), std::invalid_argument);
  CHECK_THROWS_AS(pcn_step(cur, 0.0, model, Dataset{}, 1.5, rng), std::invalid_argument);
}

TEST_CASE("invalid configurations are rejected") {
  const Model model(build_fourier_basis(1));
  PcnConfig cfg;
  cfg.beta = 0.0;
  CHECK_THROWS_AS(run_pcn(model, Dataset{}, cfg), std::invalid_argument);
  cfg = {};
  cfg.burn_in = cfg.n_iterations;
  CHECK_THROWS_AS(run_pcn(model, Dataset{}, cfg), std::invalid_argument);
  cfg = {};
  cfg.thinning = 0;
  CHECK_THROWS_AS(run_pcn(model, Dataset{}, cfg), std::invalid_argument);
  cfg = {};
  CHECK_THROWS_AS(run_pcn_chains(model, Dataset{}, cfg, 0), std::invalid_argument);
}

TEST_CASE("find_map zeroes the posterior gradient") {
  const Model model(build_fourier_basis(2));
  const Dataset data = small_dataset();
  const LikelihoodTerm term(model, data);
  const Eigen::VectorXd map = find_map(term, model.rank());
  Eigen::VectorXd grad;
  term.value_and_gradient(map, grad);
  CHECK((grad - map).norm() < 1e-7);
  // a MAP start changes only the first state, so the chain still runs
  PcnConfig cfg;
  cfg.n_iterations = 300;
  cfg.burn_in = 100;
  cfg.thinning = 10;
  cfg.start = ChainStart::map;
  CHECK(run_pcn(model, data, cfg).size() == 20);
  CHECK(find_map(LikelihoodTerm(model, Dataset{}), model.rank()).norm() == 0.0);
}

TEST_CASE("chains are seeded independently and pooled in chain order") {
  const Model model(build_fourier_basis(1));
  const Dataset data = small_dataset();
  PcnConfig cfg;
  cfg.n_iterations = 400;
  cfg.burn_in = 100;
  cfg.thinning = 10;
  cfg.seed = 7;
  const auto pooled = run_pcn_chains(model, data, cfg, 3);
  REQUIRE(pooled.size() == 90);
  for (std::size_t c = 0; c < 3; ++c) {
    PcnConfig single = cfg;
    single.seed = derive_seed(cfg.seed, c);
    CHECK(pooled.draws.middleCols(static_cast<Eigen::Index>(30 * c), 30) == run_pcn(model, data, single).draws);
  }
  CHECK(run_pcn_chains(model, data, cfg, 1).draws == run_pcn(model, data, cfg).draws);
}

TEST_CASE("posterior_mean_field averages the draws' densities") {
  const Model model(build_fourier_basis(2));
  const auto p = static_cast<Eigen::Index>(model.rank());
  Rng rng(13);
  const std::vector<double> xs{0.0, 0.4, 1.0};
  PosteriorEnsemble one;
  one.draws = standard_normal(p, rng);
  const auto single = posterior_mean_field(one, model, xs);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    CHECK((single[i].values - slgp_density(model, one.draw(0), xs[i]).values).cwiseAbs().maxCoeff() < 1e-15);
  }

  PosteriorEnsemble same;
  same.draws = one.draws.replicate(1, 4);
  const auto repeated = posterior_mean_field(same, model, xs);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    CHECK((repeated[i].values - single[i].values).cwiseAbs().maxCoeff() < 1e-13);
  }

  PosteriorEnsemble two;
  two.draws.resize(p, 2);
  two.draws.col(0) = standard_normal(p, rng);
  two.draws.col(1) = standard_normal(p, rng);
  const auto mean = posterior_mean_field(two, model, xs);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const Eigen::VectorXd expected = 0.5 * (slgp_density(model, two.draw(0), xs[i]).values +
                                            slgp_density(model, two.draw(1), xs[i]).values);
    CHECK((mean[i].values - expected).cwiseAbs().maxCoeff() < 1e-14);
    CHECK(mean[i].integral() == doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK_THROWS_AS(posterior_mean_field(PosteriorEnsemble{}, model, xs), std::invalid_argument);
}
