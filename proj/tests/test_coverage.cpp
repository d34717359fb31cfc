#include <doctest.h>

#include <cmath>

#include <boost/math/distributions/students_t.hpp>

#include "pmp/coverage.hpp"

using namespace pmp;

namespace {

std::vector<ObsVec> draw(const ParametricFamily& fam, const ParamVec& theta, int n, std::uint64_t seed) {
  RngStream rng(seed, 0);
  std::vector<ObsVec> d;
  for (int i = 0; i < n; ++i) d.push_back(fam.sample(theta, rng));
  return d;
}

}  // namespace

TEST_SUITE("coverage") {

TEST_CASE("posterior grid weights are normalised and the grid is well placed") {
  NumericsConfig cfg;
  const FamilyPtr ls = builtin_family("location-scale-normal");
  const auto data = draw(*ls, param_vec({1.0, 2.0}), 15, 4);
  const PosteriorGrid pg = posterior_grid(*ls, data, ls->prior("right-haar"), auto_grid_spec(*ls, data, cfg), cfg);
  double s = 0.0;
  for (double w : pg.weights) s += w;
  CHECK(s == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(pg.boundary_mass < cfg.grid_boundary_tol);
  CHECK(pg.total_nodes == 64u * 64u);
  CHECK(pg.nodes.size() == pg.weights.size());
  CHECK(pg.data_digest.size() == 16);

  GridSpec off = auto_grid_spec(*ls, data, cfg);
  off.center(0) += 20.0 * off.half_width(0);
  const PosteriorGrid bad = posterior_grid(*ls, data, ls->prior("right-haar"), off, cfg);
  CHECK(bad.boundary_mass > 0.1);
}

TEST_CASE("predictive quantile under right-Haar is the Student-t interval") {
  NumericsConfig cfg;
  const FamilyPtr ls = builtin_family("location-scale-normal");
  const int n = 8;
  const auto data = draw(*ls, param_vec({0.0, 1.0}), n, 12);
  double mean = 0.0;
  for (const ObsVec& x : data) mean += x(0);
  mean /= n;
  double ss = 0.0;
  for (const ObsVec& x : data) ss += (x(0) - mean) * (x(0) - mean);
  const double s = std::sqrt(ss / (n - 1));
  const PosteriorGrid pg = posterior_grid(*ls, data, ls->prior("right-haar"), auto_grid_spec(*ls, data, cfg), cfg);
  const boost::math::students_t t(n - 1);
  // The marginal posterior of μ is a t with n−1 degrees of freedom, so the
  // default ±12 half-width truncates about 1e-5 of tail mass; a wider and
  // finer grid recovers the closed form to 1e-7.
  NumericsConfig wide = cfg;
  wide.grid_half_width = 24.0;
  wide.grid_nodes = 128;
  const PosteriorGrid pw = posterior_grid(*ls, data, ls->prior("right-haar"), auto_grid_spec(*ls, data, wide), wide);
  for (double a : {0.1, 0.5, 0.9}) {
    const double exact = mean + s * std::sqrt(1.0 + 1.0 / n) * boost::math::quantile(boost::math::complement(t, a));
    CHECK(predictive_quantile(pg, *ls, a, cfg) == doctest::Approx(exact).epsilon(3e-5));
    CHECK(std::abs(predictive_quantile(pw, *ls, a, wide) - exact) < 3e-7);
  }
}

TEST_CASE("predictive HPD threshold encloses the requested predictive mass") {
  NumericsConfig cfg;
  const FamilyPtr bvn = builtin_family("bvn-cholesky");
  const auto data = draw(*bvn, param_vec({1.0, 1.0, 0.0}), 20, 3);
  const PosteriorGrid pg = posterior_grid(*bvn, data, bvn->prior("jeffreys"), auto_grid_spec(*bvn, data, cfg), cfg);
  const RayTable table = predictive_table(pg, *bvn, cfg);
  for (double a : {0.3, 0.8}) {
    const double m = predictive_hpd_threshold(pg, *bvn, a, cfg);
    CHECK(table.mass(std::log(m)) == doctest::Approx(a).epsilon(1e-7));
  }
}

TEST_CASE("coverage runs are deterministic and independent of the worker count") {
  NumericsConfig cfg;
  const FamilyPtr ls = builtin_family("location-scale-normal");
  cfg.workers = 1;
  const CoverageReport a = coverage_mc(*ls, ls->prior("jeffreys"), param_vec({0.0, 1.0}), 10, 0.2, 120, 99, cfg);
  cfg.workers = 3;
  const CoverageReport b = coverage_mc(*ls, ls->prior("jeffreys"), param_vec({0.0, 1.0}), 10, 0.2, 120, 99, cfg);
  CHECK(a.coverage_hat == b.coverage_hat);
  CHECK(a.se == b.se);
  CHECK(a.binary_hat == b.binary_hat);
  CHECK(a.config_hash == b.config_hash);
  const CoverageReport c = coverage_mc(*ls, ls->prior("jeffreys"), param_vec({0.0, 1.0}), 10, 0.2, 120, 100, cfg);
  CHECK(c.coverage_hat != a.coverage_hat);
  CHECK(c.config_hash != a.config_hash);
  CHECK(a.defect_hat == doctest::Approx(10 * (0.2 - a.coverage_hat)));
  CHECK_FALSE(a.failed);
  CHECK(a.retries == 0);
}

TEST_CASE("replicates needing a widened grid are counted and fail the run past 1%") {
  // With three observations the posterior of μ has polynomial tails that
  // overrun the default half-width, so every replicate retries.
  NumericsConfig cfg;
  cfg.workers = 1;
  const FamilyPtr ls = builtin_family("location-scale-normal");
  const CoverageReport r = coverage_mc(*ls, ls->prior("jeffreys"), param_vec({0.0, 1.0}), 3, 0.2, 100, 7, cfg);
  CHECK(r.retries == 100);
  CHECK(r.failures == 0);
  CHECK(r.failed);
  cfg.grid_half_width = 54.0;
  const CoverageReport w = coverage_mc(*ls, ls->prior("jeffreys"), param_vec({0.0, 1.0}), 3, 0.2, 100, 7, cfg);
  CHECK(w.retries == 0);
  CHECK_FALSE(w.failed);
}

TEST_CASE("coverage rejects bad run parameters") {
  NumericsConfig cfg;
  const FamilyPtr ls = builtin_family("location-scale-normal");
  CHECK_THROWS_AS(coverage_mc(*ls, ls->prior("jeffreys"), param_vec({0.0, 1.0}), 5, 0.2, 0, 1, cfg), ConfigError);
  CHECK_THROWS_AS(coverage_mc(*ls, ls->prior("jeffreys"), param_vec({0.0, 1.0}), 0, 0.2, 100, 1, cfg), ConfigError);
  CHECK_THROWS_AS(coverage_mc(*ls, ls->prior("jeffreys"), param_vec({0.0, 1.0}), 5, 1.2, 100, 1, cfg), ConfigError);
  CHECK_THROWS_AS(coverage_mc(*ls, ls->prior("jeffreys"), param_vec({0.0, -1.0}), 5, 0.2, 100, 1, cfg), DomainError);
  CHECK_THROWS_AS(coverage_mc(*builtin_family("bvn-cholesky"), builtin_family("bvn-cholesky")->prior("jeffreys"),
                              param_vec({1.0, 1.0, 0.0}), 5, 0.2, 100, 1, cfg),
                  DomainError);
}

TEST_CASE("Rao-Blackwellised and binary estimators agree within noise") {
  NumericsConfig cfg;
  const FamilyPtr ls = builtin_family("location-scale-normal");
  const CoverageReport r = coverage_mc(*ls, ls->prior("right-haar"), param_vec({0.0, 1.0}), 6, 0.3, 400, 5, cfg);
  CHECK(std::abs(r.coverage_hat - r.binary_hat) < 4.0 * r.binary_se);
  CHECK(r.se < r.binary_se);
}

TEST_CASE("parallel_for visits every index once and rethrows") {
  std::vector<int> hits(1000, 0);
  parallel_for(hits.size(), 4, [&](std::size_t i) { hits[i] += 1; });
  for (int h : hits) CHECK(h == 1);
  CHECK_THROWS_AS(parallel_for(50, 4, [](std::size_t i) { if (i == 17) throw NumericFailure("boom"); }), NumericFailure);
}

}
