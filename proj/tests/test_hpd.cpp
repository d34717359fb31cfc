#include <doctest.h>

#include <cmath>
#include <numbers>

#include "pmp/hpd_match.hpp"
#include "pmp/level_set.hpp"
#include "pmp/rng.hpp"

using namespace pmp;

TEST_SUITE("level_set") {

TEST_CASE("ray table on the standard bivariate normal") {
  NumericsConfig cfg;
  auto logf = [](const ObsVec& x) { return -0.5 * x.squaredNorm() - std::log(2 * std::numbers::pi); };
  const RayTable t(obs_vec({0.0, 0.0}), logf, cfg);
  CHECK(t.dim() == 2);
  CHECK(t.peak() == doctest::Approx(-std::log(2 * std::numbers::pi)));
  for (double r : {0.3, 1.0, 2.5}) {
    const double s = t.peak() - 0.5 * r * r;
    CHECK(t.mass(s) == doctest::Approx(1.0 - std::exp(-0.5 * r * r)).epsilon(1e-10));
  }
  for (double a : {0.05, 0.5, 0.95}) {
    const double s = t.find_level(a, 1e-12);
    CHECK(std::exp(s) == doctest::Approx((1.0 - a) / (2 * std::numbers::pi)).epsilon(1e-9));
  }
  // ∫_{r<1} |x|² f dx = 2 − 3e^{−1/2}
  const double second = t.integrate(t.peak() - 0.5, 0.0, [](const ObsVec& x, double lf) { return x.squaredNorm() * std::exp(lf); });
  CHECK(second == doctest::Approx(2.0 - 3.0 * std::exp(-0.5)).epsilon(1e-9));
  CHECK(t.region_mass_err(t.peak() - 0.5) < 1e-8);
}

TEST_CASE("mass is monotone in the level (property)") {
  NumericsConfig cfg;
  auto logf = [](const ObsVec& x) {
    // Skewed, non-elliptical but star-shaped density (unnormalised).
    return -0.5 * x(0) * x(0) - 0.25 * std::pow(x(1), 4) + 0.3 * x(0) * x(1);
  };
  const RayTable t(obs_vec({0.0, 0.0}), logf, cfg);
  double prev = -1.0;
  for (double drop = 0.0; drop <= 30.0; drop += 0.37) {
    const double m = t.mass(t.peak() - drop);
    CHECK(m >= prev);
    prev = m;
  }
}

TEST_CASE("one-dimensional table uses two rays") {
  NumericsConfig cfg;
  auto logf = [](const ObsVec& x) { return -0.5 * x(0) * x(0) - 0.5 * std::log(2 * std::numbers::pi); };
  const RayTable t(obs_vec({0.0}), logf, cfg);
  // Central 90% interval is ±1.6448536269514722.
  const double s = t.find_level(0.9, 1e-12);
  CHECK(std::sqrt(2.0 * (t.peak() - s)) == doctest::Approx(1.6448536269514722).epsilon(1e-9));
}

}

TEST_SUITE("hpd_match") {

TEST_CASE("bivariate normal thresholds") {
  NumericsConfig cfg;
  const FamilyPtr bvn = builtin_family("bvn-cholesky");
  CHECK(hpd_threshold(*bvn, param_vec({1.0, 1.0, 0.0}), 0.25, cfg) == doctest::Approx(0.1193662073189215).epsilon(1e-9));
  CHECK(hpd_threshold(*bvn, param_vec({1.0, 1.0, 0.0}), 0.75, cfg) == doctest::Approx(0.039788735772973834).epsilon(1e-9));
  CHECK_THROWS_AS(hpd_threshold(*bvn, param_vec({1.0, 1.0, 0.0}), 0.0, cfg), DomainError);
}

TEST_CASE("xi agrees with the oracle for N(theta, theta)") {
  NumericsConfig cfg;
  const FamilyPtr fam = builtin_family("normal-mean-eq-var");
  CHECK(xi_vector(*fam, param_vec({1.0}), 0.3, cfg)(0) == doctest::Approx(-0.14272231713198518).epsilon(1e-8));
  CHECK(xi_vector(*fam, param_vec({1.0}), 0.8, cfg)(0) == doctest::Approx(-0.22491016203854441).epsilon(1e-8));
}

TEST_CASE("b matrix and HPD UPMP for N(theta, theta)") {
  NumericsConfig cfg;
  const FamilyPtr fam = builtin_family("normal-mean-eq-var");
  const BMatrix b = b_matrix(*fam, param_vec({1.0}), cfg);
  // ∂ξ/∂α is singular at both ends of (0,1); the graded α-rule converges
  // like n^-3.7, leaving 9e-6 at the default 64 nodes and 7e-7 at 128.
  CHECK(b.b(0, 0) == doctest::Approx(0.5).epsilon(2e-5));
  NumericsConfig fine = cfg;
  fine.alpha_nodes = 128;
  CHECK(b_matrix(*fam, param_vec({1.0}), fine).b(0, 0) == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(b.independent());
  // The matching prior is (2θ+1)/θ, so ∂λ = 2/(2θ+1) − 1/θ.
  for (double t : {0.5, 1.0, 3.0}) {
    const ParamVec g = hpd_upmp_gradient(*fam, param_vec({t}), cfg);
    CHECK(g(0) == doctest::Approx(2.0 / (2.0 * t + 1.0) - 1.0 / t).epsilon(1e-5));
  }
  for (double a : {0.2, 0.5, 0.9}) {
    CHECK(std::abs(hpd_residual(*fam, fam->prior("hpd-matching"), param_vec({1.5}), a, cfg)) < 1e-6);
  }
}

TEST_CASE("Jeffreys is HPD matching on the bivariate normal") {
  NumericsConfig cfg;
  const FamilyPtr bvn = builtin_family("bvn-cholesky");
  for (double a : {0.1, 0.5, 0.9}) {
    CHECK(std::abs(hpd_residual(*bvn, bvn->prior("jeffreys"), param_vec({1.0, 2.0, 0.3}), a, cfg)) < 1e-6);
  }
  CHECK(std::abs(hpd_residual(*bvn, bvn->prior("uniform"), param_vec({1.0, 2.0, 0.3}), 0.5, cfg)) > 1e-2);
}

TEST_CASE("dependent xi: singular b and LinearlyDependentXi") {
  NumericsConfig cfg;
  const FamilyPtr bvn = builtin_family("bvn-cholesky");
  const BMatrix b = b_matrix(*bvn, param_vec({1.0, 1.0, 0.0}), cfg);
  CHECK_FALSE(b.independent());
  CHECK(b.ratio <= 1e-6);
  try {
    (void)hpd_upmp_gradient(*bvn, param_vec({1.0, 1.0, 0.0}), cfg);
    FAIL("expected LinearlyDependentXi");
  } catch (const LinearlyDependentXi& e) {
    CHECK(e.ratio() <= 1e-6);
  }
  // Location models: the region moves with θ, so ξ vanishes identically.
  const FamilyPtr mv = builtin_family("mvlocation-spherical-2d");
  CHECK(xi_vector(*mv, param_vec({0.5, -1.0}), 0.4, cfg).cwiseAbs().maxCoeff() < 1e-9);
  CHECK_FALSE(b_matrix(*mv, param_vec({0.5, -1.0}), cfg).independent());
}

TEST_CASE("location-scale normal: the location row of xi vanishes") {
  // Symmetric HPD intervals make ∂ξ/∂μ zero, so b is singular. This is the
  // reason the HPD UPMP is unavailable on this family.
  NumericsConfig cfg;
  const FamilyPtr ls = builtin_family("location-scale-normal");
  for (double a : {0.2, 0.6}) {
    const ParamVec xi = xi_vector(*ls, param_vec({0.0, 1.0}), a, cfg);
    CHECK(std::abs(xi(0)) < 1e-10);
    CHECK(std::abs(xi(1)) > 1e-2);
  }
  CHECK_THROWS_AS(hpd_upmp_gradient(*ls, param_vec({0.0, 1.0}), cfg), LinearlyDependentXi);
}

TEST_CASE("separability diagnosis") {
  NumericsConfig cfg;
  const FamilyPtr bvn = builtin_family("bvn-cholesky");
  const SeparabilityReport r =
      separability_diagnosis(*bvn, {param_vec({1.0, 1.0, 0.0}), param_vec({1.0, 2.0, 0.3})}, cfg);
  // ξ = R(α)(1/θ₁, 1/θ₂, 0): one common α-profile.
  CHECK(r.form == SeparableForm::Eq41);
  CHECK(r.common_profile < 1e-6);
  const FamilyPtr ls = builtin_family("location-scale-normal");
  CHECK(separability_diagnosis(*ls, {param_vec({0.0, 1.0}), param_vec({1.0, 2.0})}, cfg).form == SeparableForm::Eq41);
  CHECK(to_string(SeparableForm::Eq46) == "eq46");
  CHECK_THROWS_AS(separability_diagnosis(*ls, {}, cfg), DomainError);
}

}
