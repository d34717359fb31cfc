#include "pmp/quantile_match.hpp"

#include <algorithm>
#include <cmath>

namespace pmp {

namespace {

void require_univariate(const ParametricFamily& fam, const char* what) {
  if (fam.obs_dim() != 1) throw DomainError(std::string(what) + " needs univariate observations");
}

void require_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0,1)");
}

// Flux values g^{-1} v at one θ for every α, together with their quadrature errors.
struct FluxValues {
  std::vector<ParamVec> flux;
  std::vector<double> err;
};

FluxValues quantile_flux_values(const ParametricFamily& fam, const ParamVec& theta,
                                const std::vector<double>& alphas, const NumericsConfig& cfg) {
  const InfoMatrix info = fisher_info(fam, theta, cfg);
  FluxValues out;
  for (double a : alphas) {
    const QuantileSlice s = quantile_slice(fam, theta, a, cfg);
    out.flux.push_back(info.g_inv * s.mu);
    out.err.push_back(s.quad_error * info.g_inv.cwiseAbs().maxCoeff() + info.quad_error);
  }
  return out;
}

}  // namespace

double freq_quantile(const ParametricFamily& fam, const ParamVec& theta, double alpha, const NumericsConfig& cfg) {
  require_univariate(fam, "freq_quantile");
  require_alpha(alpha);
  fam.require_domain(theta);
  auto fn = [&](double q) { return fam.survival(q, theta) - alpha; };
  const Box w = fam.window(theta, std::min({cfg.window_tail_mass, 0.5 * alpha, 0.5 * (1.0 - alpha)}));
  double lo = w[0].lo, hi = w[0].hi;
  if (!(fn(lo) >= 0.0 && fn(hi) <= 0.0)) {
    try {
      std::tie(lo, hi) = expand_bracket(fn, lo, hi);
    } catch (const NumericFailure&) {
      throw ConfigError(fam.name() + ": quantile root not bracketed by the support window");
    }
  }
  return find_root(fn, lo, hi, cfg.root_tol);
}

QuantileSlice quantile_slice(const ParametricFamily& fam, const ParamVec& theta, double alpha,
                             const NumericsConfig& cfg) {
  QuantileSlice s;
  s.theta = theta;
  s.alpha = alpha;
  s.q = freq_quantile(fam, theta, alpha, cfg);
  const std::vector<double> breaks = fam.window_breaks(theta, cfg.window_tail_mass)[0];
  const double hi = std::max(breaks.back(), s.q);
  auto integrand = [&](double u) {
    const ObsVec x = obs_vec({u});
    return ParamVec(fam.density(x, theta) * fam.score(x, theta));
  };
  const auto r = integrate_adaptive(integrand, clip_breaks(breaks, s.q, hi), cfg.quad_abs_tol, cfg.quad_rel_tol, cfg.quad_max_intervals);
  s.mu = r.value;
  s.quad_error = r.error;
  if (fam.has_cdf()) {
    s.identity_checked = true;
    s.identity_error = (s.mu + fam.cdf_theta_gradient(s.q, theta)).cwiseAbs().maxCoeff();
  }
  return s;
}

ParamVec mu_vector(const ParametricFamily& fam, const ParamVec& theta, double alpha, const NumericsConfig& cfg) {
  return quantile_slice(fam, theta, alpha, cfg).mu;
}

FluxSlice quantile_flux(const ParametricFamily& fam, const ParamVec& theta, const std::vector<double>& alphas,
                        const NumericsConfig& cfg) {
  require_univariate(fam, "quantile matching");
  FluxSlice out;
  out.theta = theta;
  out.alphas = alphas;
  const FluxValues centre = quantile_flux_values(fam, theta, alphas, cfg);
  out.flux = centre.flux;
  out.divergence.assign(alphas.size(), 0.0);
  out.err_est.assign(alphas.size(), 0.0);
  for (int s = 0; s < fam.param_dim(); ++s) {
    const double h = fd_step(theta(s), cfg.fd_step_theta);
    const ParamVec up = stencil_point(fam, theta, s, h);
    const ParamVec dn = stencil_point(fam, theta, s, -h);
    const FluxValues fu = quantile_flux_values(fam, up, alphas, cfg);
    const FluxValues fd = quantile_flux_values(fam, dn, alphas, cfg);
    const double span = up(s) - dn(s);
    for (std::size_t k = 0; k < alphas.size(); ++k) {
      out.divergence[k] += (fu.flux[k](s) - fd.flux[k](s)) / span;
      out.err_est[k] += (fu.err[k] + fd.err[k]) / span;
    }
  }
  return out;
}

double quantile_residual(const ParametricFamily& fam, const PriorField& prior, const ParamVec& theta, double alpha,
                         const NumericsConfig& cfg) {
  const FluxSlice f = quantile_flux(fam, theta, {alpha}, cfg);
  return f.residual(0, prior.log_prior_gradient(theta));
}

std::string to_string(MatchKind kind) { return kind == MatchKind::Quantile ? "quantile" : "hpd"; }

double ResidualReport::sup_norm() const {
  double m = 0.0;
  for (const auto& c : cells) m = std::max(m, std::abs(c.epsilon));
  return m;
}

double ResidualReport::max_err_est() const {
  double m = 0.0;
  for (const auto& c : cells) m = std::max(m, c.err_est);
  return m;
}

ResidualReport residual_report(const ParametricFamily& fam, const PriorField& prior, MatchKind kind,
                               const std::vector<FluxSlice>& fluxes) {
  ResidualReport rep;
  rep.family = fam.name();
  rep.prior = prior.name;
  rep.kind = kind;
  for (const FluxSlice& f : fluxes) {
    const ParamVec grad = prior.log_prior_gradient(f.theta);
    for (std::size_t k = 0; k < f.alphas.size(); ++k) {
      ResidualCell c;
      c.theta = f.theta;
      c.alpha = f.alphas[k];
      c.epsilon = f.residual(k, grad);
      c.err_est = f.err_est[k];
      if (!std::isfinite(c.epsilon)) throw NumericFailure("non-finite residual at alpha=" + std::to_string(c.alpha));
      rep.cells.push_back(std::move(c));
    }
  }
  return rep;
}

std::vector<double> default_alpha_sweep() {
  std::vector<double> a;
  for (int i = 1; i <= 19; ++i) a.push_back(0.05 * i);
  return a;
}

ParamVec h_field(const ParametricFamily& fam, const ParamVec& theta, const NumericsConfig& cfg) {
  require_univariate(fam, "h_field");
  fam.require_domain(theta);
  const int p = fam.param_dim();
  using Cube = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, 27, 1>;
  // A(r,s,t) = ∫ F_s l_r ∂_x l_t dx, stored at index (r·p + s)·p + t.
  auto integrand = [&](double x) {
    const ParamVec F = fam.cdf_theta_gradient(x, theta);
    const ParamVec l = fam.score(obs_vec({x}), theta);
    const ParamVec dl = fam.score_x_derivative(x, theta);
    Cube out(p * p * p);
    for (int r = 0; r < p; ++r)
      for (int s = 0; s < p; ++s)
        for (int t = 0; t < p; ++t) out((r * p + s) * p + t) = F(s) * l(r) * dl(t);
    return out;
  };
  const auto A = integrate_adaptive(integrand, fam.window_breaks(theta, cfg.window_tail_mass)[0], cfg.quad_abs_tol, cfg.quad_rel_tol,
                                    cfg.quad_max_intervals)
                     .value;
  const InfoMatrix info = fisher_info(fam, theta, cfg);
  ParamVec h = ParamVec::Zero(p);
  for (int r = 0; r < p; ++r)
    for (int s = 0; s < p; ++s)
      for (int t = 0; t < p; ++t)
        h(r) += info.g_inv(s, t) * (A((r * p + s) * p + t) - A((s * p + r) * p + t));
  return h;
}

ParamVec upmp_gradient(const ParametricFamily& fam, const ParamVec& theta, const NumericsConfig& cfg) {
  return jeffreys_gradient(fam, theta, cfg) + h_field(fam, theta, cfg);
}

GradientTest gradient_field_test(const VectorField& field, const std::vector<ParamVec>& grid,
                                 const NumericsConfig& cfg) {
  GradientTest out;
  for (const ParamVec& theta : grid) {
    const auto p = theta.size();
    if (p < 2) continue;
    // J(r, s) = ∂_s v_r
    ParamMat J(p, p);
    for (Eigen::Index s = 0; s < p; ++s) {
      const double h = fd_step(theta(s), cfg.curl_step);
      ParamVec up = theta, dn = theta;
      up(s) += h;
      dn(s) -= h;
      J.col(s) = (field(up) - field(dn)) / (up(s) - dn(s));
    }
    const double curl = (J - J.transpose()).cwiseAbs().maxCoeff();
    if (curl > out.max_curl || out.worst_theta.size() == 0) {
      out.max_curl = curl;
      out.worst_theta = theta;
    }
  }
  out.is_gradient = out.max_curl <= cfg.curl_tol;
  return out;
}

PathIntegral integrate_field(const VectorField& field, const ParamVec& theta_ref, const ParamVec& theta,
                             const NumericsConfig& cfg) {
  if (theta_ref.size() != theta.size()) throw DomainError("path endpoints differ in dimension");
  const GaussRule rule = gauss_legendre(cfg.path_nodes);
  const auto p = theta.size();
  auto along = [&](bool forward) {
    ParamVec cur = theta_ref;
    double total = 0.0;
    for (Eigen::Index step = 0; step < p; ++step) {
      const Eigen::Index i = forward ? step : p - 1 - step;
      const double a = cur(i), b = theta(i);
      if (a != b) {
        const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
        for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
          ParamVec pt = cur;
          pt(i) = mid + half * rule.nodes[k];
          total += half * rule.weights[k] * field(pt)(i);
        }
      }
      cur(i) = b;
    }
    return total;
  };
  PathIntegral out;
  out.value = along(true);
  out.path_gap = std::abs(out.value - along(false));
  return out;
}

double reconstruct_log_prior(const VectorField& field, const ParamVec& theta_ref, const ParamVec& theta,
                             const NumericsConfig& cfg) {
  const PathIntegral r = integrate_field(field, theta_ref, theta, cfg);
  if (r.path_gap > cfg.path_tol) {
    throw NotAGradientField("line integrals along two coordinate orders differ by " + std::to_string(r.path_gap));
  }
  return r.value;
}

ParamVec local_prior_gradient(const ParametricFamily& fam, const ParamVec& theta, const ParamVec& theta0,
                              const NumericsConfig& cfg) {
  fam.require_domain(theta0);
  return jeffreys_gradient(fam, theta, cfg) + h_field(fam, theta0, cfg);
}

double avg_prediction_error(const ParametricFamily& fam, const PriorField& prior, const ParamVec& theta, int r,
                            const NumericsConfig& cfg) {
  require_univariate(fam, "avg_prediction_error");
  if (r < 0 || r >= fam.param_dim()) throw DomainError("parameter index out of range");
  const AlphaGrid grid = AlphaGrid::from(cfg);
  const FluxSlice f = quantile_flux(fam, theta, grid.nodes, cfg);
  const ParamVec grad = prior.log_prior_gradient(theta);
  double total = 0.0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    // ∂μ_r/∂α = l_r(q) and ∂q/∂α = −1/f(q), so ∂²μ_r/∂α² = −∂_x l_r(q)/f(q).
    const double q = freq_quantile(fam, theta, grid.nodes[k], cfg);
    const double d2mu = -fam.score_x_derivative(q, theta)(r) / fam.density(obs_vec({q}), theta);
    total += grid.weights[k] * d2mu * f.residual(k, grad);
  }
  return total;
}

}  // namespace pmp
