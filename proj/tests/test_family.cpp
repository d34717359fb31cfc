#include <doctest.h>

#include <cmath>
#include <numbers>

#include "pmp/family.hpp"
#include "pmp/fisher.hpp"

using namespace pmp;

TEST_SUITE("family") {

TEST_CASE("every built-in passes its own invariant suite at the reference point") {
  NumericsConfig cfg;
  for (const std::string& name : builtin_family_names()) {
    CAPTURE(name);
    const FamilyPtr fam = builtin_family(name);
    const FamilyDiagnostic d = validate_family(*fam, fam->reference_theta(), cfg);
    for (const DiagnosticCheck& c : d.checks) {
      CAPTURE(c.name);
      CAPTURE(c.error);
      CHECK(c.passed);
    }
    CHECK(d.all_passed());
  }
}

TEST_CASE("invariants also hold away from the reference point") {
  NumericsConfig cfg;
  const std::vector<std::pair<std::string, ParamVec>> cases = {
      {"location-scale-t(1)", param_vec({-3.0, 4.0})},
      {"location-scale-logistic", param_vec({2.0, 0.3})},
      {"normal-mean-eq-var", param_vec({6.5})},
      {"bvn-cholesky", param_vec({0.5, 1.5, -0.4})},
      {"mvlocation-spherical-2d", param_vec({1.0, -2.0})},
  };
  for (const auto& [name, theta] : cases) {
    CAPTURE(name);
    CHECK(validate_family(*builtin_family(name), theta, cfg).all_passed());
  }
}

TEST_CASE("domain violations are errors, never clamped") {
  const FamilyPtr ls = builtin_family("location-scale-normal");
  CHECK_THROWS_AS(ls->require_domain(param_vec({0.0, -1.0})), DomainError);
  CHECK_THROWS_AS(ls->require_domain(param_vec({0.0, 1.0, 2.0})), DomainError);
  CHECK_THROWS_AS(fisher_info(*ls, param_vec({0.0, 0.0}), NumericsConfig{}), DomainError);
  CHECK_FALSE(ls->in_domain(param_vec({0.0, 0.0})));
  CHECK(ls->in_domain(param_vec({-5.0, 0.1})));
}

TEST_CASE("unknown names are configuration errors") {
  CHECK_THROWS_AS(builtin_family("no-such-family"), ConfigError);
  CHECK_THROWS_AS((void)builtin_family("location-scale-normal")->prior("no-such-prior"), ConfigError);
  CHECK_THROWS_AS(make_base_density("cauchy2"), ConfigError);
  CHECK_THROWS_AS(make_base_density("t0"), ConfigError);
}

TEST_CASE("base densities") {
  for (const char* name : {"normal", "logistic", "t1", "t(2)", "t5", "t30"}) {
    CAPTURE(name);
    const BasePtr b = make_base_density(name);
    // Symmetric about zero, upper quantile inverts the survival function.
    CHECK(b->cdf(0.0) == doctest::Approx(0.5).epsilon(1e-15));
    for (double p : {0.01, 0.2, 0.5, 0.9}) CHECK(b->survival(b->upper_quantile(p)) == doctest::Approx(p).epsilon(1e-12));
    // ψ is the derivative of log f*.
    const double z = 0.7, h = 1e-6;
    CHECK(b->psi(z) == doctest::Approx((b->log_pdf(z + h) - b->log_pdf(z - h)) / (2 * h)).epsilon(1e-7));
  }
  CHECK(make_base_density("normal")->info_scale() == doctest::Approx(2.0));
  CHECK(make_base_density("logistic")->info_location() == doctest::Approx(1.0 / 3.0));
  CHECK(make_base_density("t5")->info_location() == doctest::Approx(6.0 / 8.0));
}

TEST_CASE("user location-scale family with a log-scale parameter") {
  LocationScaleSpec s;
  s.name = "t3-logscale";
  s.base = "t3";
  s.scale_mode = ScaleMode::Log;
  const FamilyPtr fam = make_location_scale_family(s);
  CHECK(fam->name() == "t3-logscale");
  CHECK(fam->param_dim() == 2);
  const ParamVec th = param_vec({0.4, std::log(2.0)});
  NumericsConfig cfg;
  CHECK(validate_family(*fam, th, cfg).all_passed());
  // On η = log σ the information is constant: diag(E[ψ²]/σ², E[(1+Zψ)²]).
  const ParamMat g = fisher_info(*fam, th, cfg).g;
  CHECK(g(0, 0) == doctest::Approx(4.0 / 6.0 / 4.0).epsilon(1e-8));
  CHECK(g(1, 1) == doctest::Approx(6.0 / 6.0).epsilon(1e-8));
  CHECK(std::abs(g(0, 1)) < 1e-10);
}

TEST_CASE("fixed-location family has one parameter") {
  LocationScaleSpec s;
  s.name = "scale-only";
  s.location_free = false;
  s.location_value = 1.0;
  const FamilyPtr fam = make_location_scale_family(s);
  CHECK(fam->param_dim() == 1);
  CHECK(fisher_info(*fam, param_vec({2.0}), NumericsConfig{}).g(0, 0) == doctest::Approx(2.0 / 4.0).epsilon(1e-8));
}

TEST_CASE("named prior gradients match their log-priors (property)") {
  NumericsConfig cfg;
  RngStream rng(11, 0);
  for (const std::string& name : builtin_family_names()) {
    const FamilyPtr fam = builtin_family(name);
    for (int trial = 0; trial < 5; ++trial) {
      ParamVec th = fam->reference_theta();
      for (Eigen::Index i = 0; i < th.size(); ++i) {
        const Interval& d = fam->param_domain()[static_cast<std::size_t>(i)];
        th(i) = d.lo == 0.0 ? std::exp(rng.normal() * 0.5) : th(i) + rng.normal();
      }
      for (const auto& [pname, prior] : fam->named_priors()) {
        CAPTURE(name);
        CAPTURE(pname);
        const ParamVec fd = fd_gradient(prior.log_prior, th, cfg);
        CHECK((prior.log_prior_gradient(th) - fd).cwiseAbs().maxCoeff() < 1e-6 * (1.0 + fd.cwiseAbs().maxCoeff()));
      }
    }
  }
}

TEST_CASE("samplers are reproducible for a fixed stream") {
  for (const std::string& name : builtin_family_names()) {
    const FamilyPtr fam = builtin_family(name);
    RngStream a(5, 9), b(5, 9);
    for (int i = 0; i < 20; ++i) CHECK((fam->sample(fam->reference_theta(), a) - fam->sample(fam->reference_theta(), b)).norm() == 0.0);
  }
}

}
