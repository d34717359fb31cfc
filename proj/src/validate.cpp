#include <algorithm>
#include <cmath>
#include <cstdio>

#include "pmp/family.hpp"
#include "pmp/hpd_match.hpp"

namespace pmp {

namespace {

// Kolmogorov–Smirnov statistic of sorted probability-integral transforms
// against the uniform distribution.
double ks_uniform(std::vector<double> u) {
  std::sort(u.begin(), u.end());
  const double n = static_cast<double>(u.size());
  double d = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    d = std::max({d, (static_cast<double>(i) + 1.0) / n - u[i], u[i] - static_cast<double>(i) / n});
  }
  return d;
}

double rel_err(const ParamVec& a, const ParamVec& b) {
  return (a - b).cwiseAbs().maxCoeff() / std::max(1.0, b.cwiseAbs().maxCoeff());
}

// 0.1% critical value of √n·D for large n.
constexpr double kKsCritical = 1.9495;

}  // namespace

FamilyDiagnostic validate_family(const ParametricFamily& fam, const ParamVec& theta, const NumericsConfig& cfg,
                                 std::uint64_t seed) {
  fam.require_domain(theta);
  FamilyDiagnostic diag;
  diag.family = fam.name();
  diag.theta = theta;
  auto add = [&](std::string name, double err, double tol, std::string note = {}) {
    diag.checks.push_back(DiagnosticCheck{std::move(name), err, tol, err <= tol, std::move(note)});
  };

  const AxisBreaks breaks = fam.window_breaks(theta, cfg.window_tail_mass);
  const auto mass = integrate_box([&](const ObsVec& x) { return fam.density(x, theta); }, breaks, cfg);
  add("density_mass", std::abs(mass.value - 1.0), cfg.mass_tol + 2.0 * cfg.window_tail_mass);

  // Probe points drawn from the model itself.
  RngStream probe_rng(seed, 1);
  std::vector<ObsVec> probes;
  for (int i = 0; i < 9; ++i) probes.push_back(fam.sample(theta, probe_rng));
  probes.push_back(fam.mode(theta));

  double score_err = 0.0;
  for (const ObsVec& x : probes) {
    const ParamVec fd = fd_gradient([&](const ParamVec& t) { return fam.log_density(x, t); }, theta, cfg);
    score_err = std::max(score_err, rel_err(fam.score(x, theta), fd));
  }
  add("score_vs_fd", score_err, cfg.fd_tol);

  if (fam.obs_dim() == 1) {
    if (fam.has_score_x_derivative()) {
      double err = 0.0;
      for (const ObsVec& x : probes) {
        const double h = fd_step(x(0), cfg.fd_step_theta);
        const ParamVec fd =
            (fam.score(obs_vec({x(0) + h}), theta) - fam.score(obs_vec({x(0) - h}), theta)) / (2.0 * h);
        err = std::max(err, rel_err(fam.score_x_derivative(x(0), theta), fd));
      }
      add("score_x_derivative_vs_fd", err, cfg.fd_tol);
    }
    if (fam.has_cdf()) {
      double cdf_err = 0.0;
      for (const ObsVec& x : probes) {
        const double lo = std::min(breaks[0].front(), x(0));
        const double integral =
            integrate_adaptive([&](double u) { return fam.density(obs_vec({u}), theta); },
                               clip_breaks(breaks[0], lo, x(0)), cfg.quad_abs_tol, cfg.quad_rel_tol,
                               cfg.quad_max_intervals)
                .value;
        cdf_err = std::max(cdf_err, std::abs(integral - fam.cdf(x(0), theta)));
      }
      add("cdf_vs_density", cdf_err, cfg.mass_tol + 2.0 * cfg.window_tail_mass);

      if (fam.has_cdf_theta_gradient()) {
        double err = 0.0;
        for (const ObsVec& x : probes) {
          const ParamVec fd = fd_gradient([&](const ParamVec& t) { return fam.cdf(x(0), t); }, theta, cfg);
          err = std::max(err, rel_err(fam.cdf_theta_gradient(x(0), theta), fd));
        }
        add("cdf_theta_gradient_vs_fd", err, cfg.fd_tol);
      } else {
        add("cdf_theta_gradient_vs_fd", 0.0, cfg.fd_tol, "skipped: gradient is itself a finite difference");
      }
    }
  }

  // Sampler: probability-integral transform, via the cdf in 1-D and via the
  // mass of the density level set through each draw in 2-D.
  RngStream rng(seed, 2);
  std::vector<double> u;
  u.reserve(static_cast<std::size_t>(cfg.ks_samples));
  if (fam.obs_dim() == 1 && fam.has_cdf()) {
    for (int i = 0; i < cfg.ks_samples; ++i) u.push_back(fam.cdf(fam.sample(theta, rng)(0), theta));
  } else {
    const RayTable table = hpd_table(fam, theta, cfg);
    constexpr int kLevels = 4000;
    std::vector<double> level_mass(kLevels + 1);
    const double depth = table.peak() - table.floor_level();
    for (int j = 0; j <= kLevels; ++j) level_mass[static_cast<std::size_t>(j)] = table.mass(table.peak() - depth * j / kLevels);
    for (int i = 0; i < cfg.ks_samples; ++i) {
      const double drop = (table.peak() - fam.log_density(fam.sample(theta, rng), theta)) / depth * kLevels;
      const int j = std::clamp(static_cast<int>(drop), 0, kLevels - 1);
      const double f = std::clamp(drop - j, 0.0, 1.0);
      u.push_back((1.0 - f) * level_mass[static_cast<std::size_t>(j)] + f * level_mass[static_cast<std::size_t>(j) + 1]);
    }
  }
  const double ks = std::sqrt(static_cast<double>(u.size())) * ks_uniform(std::move(u));
  add("sampler_ks", ks, kKsCritical, fam.obs_dim() == 1 ? "sqrt(n)·D against the cdf" : "sqrt(n)·D of level-set ranks");

  for (const auto& [name, prior] : fam.named_priors()) {
    const ParamVec fd = fd_gradient(prior.log_prior, theta, cfg);
    add("prior_gradient_vs_fd:" + name, rel_err(prior.log_prior_gradient(theta), fd), cfg.fd_tol);
  }
  return diag;
}

}  // namespace pmp
