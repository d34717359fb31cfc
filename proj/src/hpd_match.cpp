#include "pmp/hpd_match.hpp"

#include <algorithm>
#include <cmath>

namespace pmp {

namespace {

void require_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0,1)");
}

struct Level {
  double s;
  double err;
};

Level solve_level(const RayTable& table, double alpha, const NumericsConfig& cfg) {
  require_alpha(alpha);
  const double s = table.find_level(alpha, cfg.hpd_bisect_tol);
  return {s, table.region_mass_err(s)};
}

ParamVec region_xi(const ParametricFamily& fam, const RayTable& table, const ParamVec& theta, double s) {
  return table.integrate(s, ParamVec(ParamVec::Zero(fam.param_dim())), [&](const ObsVec& x, double lf) {
    return ParamVec(std::exp(lf) * fam.score(x, theta));
  });
}

// σ₂/σ₁ of m; 0 when the matrix is negligible against `scale`.
double rank_one_ratio(const Eigen::MatrixXd& m, double scale) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const auto& sv = svd.singularValues();
  if (!(sv(0) > 1e-9 * scale)) return 0.0;
  return sv.size() > 1 ? sv(1) / sv(0) : 0.0;
}

struct StencilValues {
  ParamMat g_inv;
  std::vector<ParamVec> dxi;  // ∂ξ/∂α on the α-grid
};

StencilValues dxi_on_grid(const ParametricFamily& fam, const ParamVec& theta, const AlphaGrid& grid,
                          const NumericsConfig& cfg) {
  StencilValues out;
  out.g_inv = fisher_info(fam, theta, cfg).g_inv;
  const RayTable table = hpd_table(fam, theta, cfg);
  for (double a : grid.nodes) out.dxi.push_back(xi_alpha_derivative(fam, table, theta, a, cfg));
  return out;
}

}  // namespace

RayTable hpd_table(const ParametricFamily& fam, const ParamVec& theta, const NumericsConfig& cfg) {
  fam.require_domain(theta);
  return RayTable(fam.mode(theta), [&](const ObsVec& x) { return fam.log_density(x, theta); }, cfg);
}

HpdSlice hpd_slice(const ParametricFamily& fam, const RayTable& table, const ParamVec& theta, double alpha,
                   const NumericsConfig& cfg) {
  const Level lv = solve_level(table, alpha, cfg);
  HpdSlice out;
  out.theta = theta;
  out.alpha = alpha;
  out.m = std::exp(lv.s);
  out.xi = region_xi(fam, table, theta, lv.s);
  out.region_mass_err = lv.err;
  return out;
}

HpdSlice hpd_slice(const ParametricFamily& fam, const ParamVec& theta, double alpha, const NumericsConfig& cfg) {
  return hpd_slice(fam, hpd_table(fam, theta, cfg), theta, alpha, cfg);
}

double hpd_threshold(const ParametricFamily& fam, const ParamVec& theta, double alpha, const NumericsConfig& cfg) {
  return hpd_slice(fam, theta, alpha, cfg).m;
}

ParamVec xi_vector(const ParametricFamily& fam, const ParamVec& theta, double alpha, const NumericsConfig& cfg) {
  return hpd_slice(fam, theta, alpha, cfg).xi;
}

ParamVec xi_alpha_derivative(const ParametricFamily& fam, const RayTable& table, const ParamVec& theta,
                             double alpha, const NumericsConfig& cfg) {
  const Level lv = solve_level(table, alpha, cfg);
  return table.boundary_average(lv.s, ParamVec(ParamVec::Zero(fam.param_dim())),
                                [&](const ObsVec& x) { return fam.score(x, theta); });
}

FluxSlice hpd_flux(const ParametricFamily& fam, const ParamVec& theta, const std::vector<double>& alphas,
                   const NumericsConfig& cfg) {
  struct Values {
    std::vector<ParamVec> flux;
    std::vector<double> err;
  };
  auto values_at = [&](const ParamVec& t) {
    const InfoMatrix info = fisher_info(fam, t, cfg);
    const RayTable table = hpd_table(fam, t, cfg);
    Values v;
    for (double a : alphas) {
      const HpdSlice s = hpd_slice(fam, table, t, a, cfg);
      v.flux.push_back(info.g_inv * s.xi);
      v.err.push_back(s.region_mass_err * info.g_inv.cwiseAbs().maxCoeff() + info.quad_error);
    }
    return v;
  };
  FluxSlice out;
  out.theta = theta;
  out.alphas = alphas;
  const Values centre = values_at(theta);
  out.flux = centre.flux;
  out.divergence.assign(alphas.size(), 0.0);
  out.err_est.assign(alphas.size(), 0.0);
  for (int s = 0; s < fam.param_dim(); ++s) {
    const double h = fd_step(theta(s), cfg.fd_step_theta);
    const ParamVec up = stencil_point(fam, theta, s, h);
    const ParamVec dn = stencil_point(fam, theta, s, -h);
    const Values vu = values_at(up);
    const Values vd = values_at(dn);
    const double span = up(s) - dn(s);
    for (std::size_t k = 0; k < alphas.size(); ++k) {
      out.divergence[k] += (vu.flux[k](s) - vd.flux[k](s)) / span;
      out.err_est[k] += (vu.err[k] + vd.err[k]) / span;
    }
  }
  return out;
}

double hpd_residual(const ParametricFamily& fam, const PriorField& prior, const ParamVec& theta, double alpha,
                    const NumericsConfig& cfg) {
  const FluxSlice f = hpd_flux(fam, theta, {alpha}, cfg);
  return f.residual(0, prior.log_prior_gradient(theta));
}

BMatrix b_matrix(const ParametricFamily& fam, const ParamVec& theta, const NumericsConfig& cfg) {
  const AlphaGrid grid = AlphaGrid::from(cfg);
  const int p = fam.param_dim();
  const RayTable table = hpd_table(fam, theta, cfg);
  BMatrix out;
  out.theta = theta;
  out.b = ParamMat::Zero(p, p);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const ParamVec d = xi_alpha_derivative(fam, table, theta, grid.nodes[k], cfg);
    out.b += grid.weights[k] * (d * d.transpose());
  }
  out.b = 0.5 * (out.b + out.b.transpose());
  out.eigenvalues = symmetric_eigenvalues(out.b);
  out.min_eigenvalue = out.eigenvalues(0);
  out.trace = out.b.trace();
  out.independence_tol = cfg.independence_tol;
  const double g_trace = fisher_info(fam, theta, cfg).g.trace();
  out.ratio = out.trace > 1e-12 * g_trace ? std::max(0.0, out.min_eigenvalue) / out.trace : 0.0;
  return out;
}

ParamVec hpd_upmp_gradient(const ParametricFamily& fam, const ParamVec& theta, const NumericsConfig& cfg) {
  const BMatrix b = b_matrix(fam, theta, cfg);
  if (!b.independent()) {
    throw LinearlyDependentXi(
        fam.name() + ": b(θ) is singular (λ_min/tr = " + std::to_string(b.ratio) +
            "); the ξ_t are linearly dependent, so there is either no uniformly matching prior or infinitely many",
        b.ratio);
  }
  const AlphaGrid grid = AlphaGrid::from(cfg);
  const int p = fam.param_dim();
  const StencilValues centre = dxi_on_grid(fam, theta, grid, cfg);
  std::vector<double> div(grid.size(), 0.0);
  for (int s = 0; s < p; ++s) {
    const double h = fd_step(theta(s), cfg.fd_step_theta);
    const ParamVec up = stencil_point(fam, theta, s, h);
    const ParamVec dn = stencil_point(fam, theta, s, -h);
    const StencilValues vu = dxi_on_grid(fam, up, grid, cfg);
    const StencilValues vd = dxi_on_grid(fam, dn, grid, cfg);
    for (std::size_t k = 0; k < grid.size(); ++k) {
      div[k] += ((vu.g_inv * vu.dxi[k])(s) - (vd.g_inv * vd.dxi[k])(s)) / (up(s) - dn(s));
    }
  }
  ParamVec c = ParamVec::Zero(p);
  for (std::size_t k = 0; k < grid.size(); ++k) c += grid.weights[k] * div[k] * centre.dxi[k];
  const ParamMat g = matrix_inverse(centre.g_inv);
  return -(g * matrix_inverse(b.b) * c);
}

std::string to_string(SeparableForm form) {
  switch (form) {
    case SeparableForm::Eq41: return "eq41";
    case SeparableForm::Eq46: return "eq46";
    case SeparableForm::Eq47: return "eq47";
    case SeparableForm::None: break;
  }
  return "none";
}

SeparabilityReport separability_diagnosis(const ParametricFamily& fam, const std::vector<ParamVec>& grid,
                                          const NumericsConfig& cfg) {
  if (grid.empty()) throw DomainError("separability diagnosis needs a non-empty θ-grid");
  const std::vector<double> alphas = default_alpha_sweep();
  const int p = fam.param_dim();
  const auto K = static_cast<Eigen::Index>(alphas.size());
  const auto G = static_cast<Eigen::Index>(grid.size());

  std::vector<Eigen::MatrixXd> xi;  // per θ: p × K
  double scale = 0.0;
  for (const ParamVec& theta : grid) {
    const RayTable table = hpd_table(fam, theta, cfg);
    Eigen::MatrixXd m(p, K);
    for (Eigen::Index k = 0; k < K; ++k) m.col(k) = hpd_slice(fam, table, theta, alphas[static_cast<std::size_t>(k)], cfg).xi;
    scale = std::max(scale, m.cwiseAbs().maxCoeff());
    xi.push_back(std::move(m));
  }
  scale = std::max(scale, 1e-300);

  SeparabilityReport rep;
  Eigen::MatrixXd all(G * p, K);
  for (Eigen::Index i = 0; i < G; ++i) {
    all.middleRows(i * p, p) = xi[static_cast<std::size_t>(i)];
    rep.per_theta = std::max(rep.per_theta, rank_one_ratio(xi[static_cast<std::size_t>(i)], scale));
  }
  rep.common_profile = rank_one_ratio(all, scale);
  double worst_row = 0.0;
  for (int t = 0; t < p; ++t) {
    Eigen::MatrixXd rows(G, K);
    for (Eigen::Index i = 0; i < G; ++i) rows.row(i) = xi[static_cast<std::size_t>(i)].row(t);
    rep.row_zero.push_back(!(rows.cwiseAbs().maxCoeff() > 1e-9 * scale));
    rep.per_row.push_back(rank_one_ratio(rows, scale));
    worst_row = std::max(worst_row, rep.per_row.back());
  }

  if (rep.common_profile <= cfg.rank_tol) {
    rep.form = SeparableForm::Eq41;
    rep.evidence = rep.common_profile;
  } else if (rep.per_theta <= cfg.rank_tol) {
    rep.form = SeparableForm::Eq46;
    rep.evidence = rep.per_theta;
  } else if (worst_row <= cfg.rank_tol) {
    rep.form = SeparableForm::Eq47;
    rep.evidence = worst_row;
  } else {
    rep.form = SeparableForm::None;
    rep.evidence = rep.per_theta;
  }
  return rep;
}

}  // namespace pmp
