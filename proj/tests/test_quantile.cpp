#include <doctest.h>

#include <cmath>

#include "pmp/fisher.hpp"
#include "pmp/quantile_match.hpp"
#include "pmp/rng.hpp"

using namespace pmp;

// Frozen reference values come from tests/oracles/oracles.py (mpmath, 30
// digits, quadrature plus numerical differentiation of the model alone).

TEST_SUITE("fisher") {

TEST_CASE("numeric Fisher information matches closed forms") {
  NumericsConfig cfg;
  const ParamMat g = fisher_info(*builtin_family("location-scale-normal"), param_vec({0.3, 1.7}), cfg).g;
  CHECK(g(0, 0) == doctest::Approx(1.0 / (1.7 * 1.7)).epsilon(1e-9));
  CHECK(g(1, 1) == doctest::Approx(2.0 / (1.7 * 1.7)).epsilon(1e-9));
  CHECK(std::abs(g(0, 1)) < 1e-11);
  const double t = 1.3;
  CHECK(fisher_info(*builtin_family("normal-mean-eq-var"), param_vec({t}), cfg).g(0, 0) ==
        doctest::Approx((2 * t + 1) / (2 * t * t)).epsilon(1e-9));
  const ParamMat gc = fisher_info(*builtin_family("location-scale-t(1)"), param_vec({0.0, 2.0}), cfg).g;
  CHECK(gc(0, 0) == doctest::Approx(0.5 / 4.0).epsilon(1e-8));
  CHECK(gc(1, 1) == doctest::Approx(0.5 / 4.0).epsilon(1e-8));
}

TEST_CASE("Fisher information is symmetric positive definite (property)") {
  NumericsConfig cfg;
  RngStream rng(3, 1);
  for (const std::string& name : builtin_family_names()) {
    const FamilyPtr fam = builtin_family(name);
    for (int trial = 0; trial < 3; ++trial) {
      ParamVec th = fam->reference_theta();
      for (Eigen::Index i = 0; i < th.size(); ++i)
        th(i) = fam->param_domain()[static_cast<std::size_t>(i)].lo == 0.0 ? std::exp(0.4 * rng.normal())
                                                                           : th(i) + rng.normal();
      const InfoMatrix info = fisher_info(*fam, th, cfg);
      CAPTURE(name);
      CHECK((info.g - info.g.transpose()).cwiseAbs().maxCoeff() == 0.0);
      CHECK(symmetric_eigenvalues(info.g)(0) > 0.0);
      CHECK(((info.g * info.g_inv) - ParamMat::Identity(th.size(), th.size())).cwiseAbs().maxCoeff() < 1e-10);
    }
  }
}

TEST_CASE("the alpha form of the information agrees with the x form") {
  NumericsConfig cfg;
  for (const char* name : {"location-scale-normal", "location-scale-t(2)", "normal-mean-eq-var"}) {
    const FamilyPtr fam = builtin_family(name);
    const ParamVec th = fam->reference_theta();
    const ParamMat g = fisher_info(*fam, th, cfg).g;
    const ParamMat ga = fisher_via_alpha(*fam, th, cfg).g;
    CAPTURE(name);
    CHECK((g - ga).cwiseAbs().maxCoeff() / g.cwiseAbs().maxCoeff() < 1e-3);
  }
}

TEST_CASE("Jeffreys gradient") {
  NumericsConfig cfg;
  // Location-scale: π ∝ σ⁻², so ∇λ = (0, −2/σ).
  const ParamVec j = jeffreys_gradient(*builtin_family("location-scale-logistic"), param_vec({1.0, 2.0}), cfg);
  CHECK(std::abs(j(0)) < 1e-8);
  CHECK(j(1) == doctest::Approx(-1.0).epsilon(1e-7));
  CHECK_THROWS_AS(jeffreys_gradient(*builtin_family("location-scale-normal"), param_vec({0.0, 1e-7}), cfg), DomainError);
}

}

TEST_SUITE("quantile_match") {

TEST_CASE("frequentist quantile and mu identity") {
  NumericsConfig cfg;
  const FamilyPtr fam = builtin_family("location-scale-normal");
  const QuantileSlice s = quantile_slice(*fam, param_vec({0.3, 1.7}), 0.1, cfg);
  CHECK(s.q == doctest::Approx(0.3 + 1.7 * 1.2815515655446004).epsilon(1e-12));
  REQUIRE(s.identity_checked);
  CHECK(s.identity_error < 1e-10);
  CHECK_THROWS_AS(freq_quantile(*fam, param_vec({0.0, 1.0}), 1.0, cfg), DomainError);
  CHECK_THROWS_AS(freq_quantile(*builtin_family("bvn-cholesky"), param_vec({1.0, 1.0, 0.0}), 0.5, cfg), DomainError);
}

TEST_CASE("Jeffreys residuals match the independent oracle") {
  NumericsConfig cfg;
  struct Anchor {
    const char* family;
    ParamVec theta;
    double alpha;
    double eps;
  };
  const std::vector<Anchor> anchors = {
      {"location-scale-normal", param_vec({0.3, 1.7}), 0.1, -0.11245508101927221},
      {"location-scale-normal", param_vec({0.3, 1.7}), 0.25, -0.10716852056393515},
      {"location-scale-normal", param_vec({0.3, 1.7}), 0.5, 0.0},
      {"location-scale-normal", param_vec({0.3, 1.7}), 0.9, 0.11245508101927221},
      {"location-scale-t(5)", param_vec({0.0, 1.0}), 0.2, -0.17475424362673799},
      {"location-scale-t(5)", param_vec({0.0, 1.0}), 0.7, 0.14160197814639168},
      {"normal-mean-eq-var", param_vec({1.3}), 0.15, -0.0037274456754515013},
      {"normal-mean-eq-var", param_vec({1.3}), 0.6, 0.043807149116289252},
  };
  for (const Anchor& a : anchors) {
    const FamilyPtr fam = builtin_family(a.family);
    const double eps = quantile_residual(*fam, fam->prior("jeffreys"), a.theta, a.alpha, cfg);
    CAPTURE(a.family);
    CAPTURE(a.alpha);
    CHECK(std::abs(eps - a.eps) < 1e-7);
  }
}

TEST_CASE("right-Haar prior matches exactly on location-scale families (property)") {
  NumericsConfig cfg;
  RngStream rng(17, 0);
  for (const char* name : {"location-scale-normal", "location-scale-t(2)", "location-scale-logistic"}) {
    const FamilyPtr fam = builtin_family(name);
    for (int trial = 0; trial < 4; ++trial) {
      const ParamVec th = param_vec({2.0 * rng.normal(), std::exp(rng.normal())});
      const double alpha = 0.02 + 0.96 * rng.uniform();
      CAPTURE(name);
      CHECK(std::abs(quantile_residual(*fam, fam->prior("right-haar"), th, alpha, cfg)) < 1e-7);
    }
  }
}

TEST_CASE("the residual is affine in the prior gradient (property)") {
  NumericsConfig cfg;
  const FamilyPtr fam = builtin_family("location-scale-t(5)");
  const ParamVec th = param_vec({0.4, 1.3});
  const FluxSlice f = quantile_flux(*fam, th, {0.3}, cfg);
  RngStream rng(2, 2);
  for (int trial = 0; trial < 5; ++trial) {
    const ParamVec a = param_vec({rng.normal(), rng.normal()});
    const ParamVec b = param_vec({rng.normal(), rng.normal()});
    const double lhs = f.residual(0, a + b) - f.residual(0, b);
    CHECK(lhs == doctest::Approx(f.residual(0, a) - f.divergence[0]).epsilon(1e-12));
  }
}

TEST_CASE("h field and UPMP on location-scale-normal") {
  NumericsConfig cfg;
  const FamilyPtr fam = builtin_family("location-scale-normal");
  for (double s : {0.5, 1.0, 2.0}) {
    const ParamVec h = h_field(*fam, param_vec({0.2, s}), cfg);
    CHECK(std::abs(h(0)) < 1e-9);
    CHECK(h(1) == doctest::Approx(1.0 / s).epsilon(1e-7));
    const ParamVec u = upmp_gradient(*fam, param_vec({0.2, s}), cfg);
    CHECK(std::abs(u(0)) < 1e-8);
    CHECK(u(1) == doctest::Approx(-1.0 / s).epsilon(1e-6));
  }
  // p = 1: the antisymmetric integrand vanishes.
  CHECK(h_field(*builtin_family("normal-mean-eq-var"), param_vec({1.0}), cfg).norm() == 0.0);
}

TEST_CASE("gradient-field test and path integration") {
  NumericsConfig cfg;
  const std::vector<ParamVec> grid = {param_vec({0.0, 1.0}), param_vec({1.0, 2.0}), param_vec({-1.0, 0.5})};
  const VectorField grad = [](const ParamVec& t) { return param_vec({2 * t(0) * t(1), t(0) * t(0) + 1.0 / t(1)}); };
  const VectorField rot = [](const ParamVec& t) { return param_vec({-t(1), t(0)}); };
  CHECK(gradient_field_test(grad, grid, cfg).is_gradient);
  const GradientTest bad = gradient_field_test(rot, grid, cfg);
  CHECK_FALSE(bad.is_gradient);
  CHECK(bad.max_curl == doctest::Approx(2.0).epsilon(1e-9));
  // Potential x²y + log y.
  const ParamVec a = param_vec({0.0, 1.0}), b = param_vec({1.5, 3.0});
  CHECK(reconstruct_log_prior(grad, a, b, cfg) == doctest::Approx(1.5 * 1.5 * 3.0 + std::log(3.0)).epsilon(1e-12));
  CHECK_THROWS_AS(reconstruct_log_prior(rot, a, b, cfg), NotAGradientField);
}

TEST_CASE("local prior gradient freezes h at theta0") {
  NumericsConfig cfg;
  const FamilyPtr fam = builtin_family("location-scale-normal");
  const ParamVec g = local_prior_gradient(*fam, param_vec({0.0, 2.0}), param_vec({0.0, 1.0}), cfg);
  // Jeffreys at σ = 2 is −2/σ = −1; h at σ₀ = 1 is +1.
  CHECK(g(1) == doctest::Approx(0.0).epsilon(1e-6));
}

TEST_CASE("average prediction error for Jeffreys on the normal scale parameter") {
  NumericsConfig cfg;
  const FamilyPtr fam = builtin_family("location-scale-normal");
  // The integrand reduces to z(α)², so the integral is E[Z²] = 1.
  CHECK(avg_prediction_error(*fam, fam->prior("jeffreys"), param_vec({0.0, 1.0}), 1, cfg) ==
        doctest::Approx(1.0).epsilon(1e-5));
  CHECK(std::abs(avg_prediction_error(*fam, fam->prior("right-haar"), param_vec({0.0, 1.0}), 1, cfg)) < 1e-6);
  CHECK_THROWS_AS(avg_prediction_error(*fam, fam->prior("jeffreys"), param_vec({0.0, 1.0}), 2, cfg), DomainError);
}

TEST_CASE("residual report carries every cell") {
  NumericsConfig cfg;
  const FamilyPtr fam = builtin_family("location-scale-normal");
  const std::vector<double> sweep = default_alpha_sweep();
  REQUIRE(sweep.size() == 19);
  CHECK(sweep.front() == doctest::Approx(0.05));
  CHECK(sweep.back() == doctest::Approx(0.95));
  const std::vector<FluxSlice> fluxes = {quantile_flux(*fam, param_vec({0.0, 1.0}), sweep, cfg),
                                         quantile_flux(*fam, param_vec({1.0, 2.0}), sweep, cfg)};
  const ResidualReport j = residual_report(*fam, fam->prior("jeffreys"), MatchKind::Quantile, fluxes);
  CHECK(j.cells.size() == 38);
  CHECK(j.sup_norm() >= 1e-2);
  CHECK(residual_report(*fam, fam->prior("right-haar"), MatchKind::Quantile, fluxes).sup_norm() <= 1e-5);
}

}
