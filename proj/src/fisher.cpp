#include "pmp/fisher.hpp"

#include <cmath>

#include "pmp/quantile_match.hpp"

namespace pmp {

namespace {

using Packed = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, 6, 1>;

Packed pack_outer(const ParamVec& l, double weight) {
  const auto p = l.size();
  Packed out(p * (p + 1) / 2);
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < p; ++i)
    for (Eigen::Index j = i; j < p; ++j) out(k++) = weight * l(i) * l(j);
  return out;
}

ParamMat unpack(const Packed& v, Eigen::Index p) {
  ParamMat g(p, p);
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < p; ++i)
    for (Eigen::Index j = i; j < p; ++j) g(i, j) = g(j, i) = v(k++);
  return g;
}

}  // namespace

InfoMatrix InfoMatrix::from(const ParamVec& theta, const ParamMat& g, double quad_error) {
  InfoMatrix info;
  info.theta = theta;
  info.g = 0.5 * (g + g.transpose());
  info.quad_error = quad_error;
  const ParamVec eig = symmetric_eigenvalues(info.g);
  if (!(eig(0) > 0.0) || !eig.allFinite()) {
    throw NonRegularModel("Fisher information is not positive definite (smallest eigenvalue " +
                          std::to_string(eig(0)) + ")");
  }
  info.g_inv = matrix_inverse(info.g);
  info.g_inv = 0.5 * (info.g_inv + info.g_inv.transpose());
  info.log_det = eig.array().log().sum();
  return info;
}

InfoMatrix fisher_info(const ParametricFamily& fam, const ParamVec& theta, const NumericsConfig& cfg) {
  fam.require_domain(theta);
  const Eigen::Index p = fam.param_dim();
  auto integrand = [&](const ObsVec& x) {
    const double lf = fam.log_density(x, theta);
    if (!std::isfinite(lf)) return Packed(Packed::Zero(p * (p + 1) / 2));
    return pack_outer(fam.score(x, theta), std::exp(lf));
  };
  const auto r = integrate_box(integrand, fam.window_breaks(theta, cfg.window_tail_mass), cfg);
  return InfoMatrix::from(theta, unpack(r.value, p), r.error);
}

InfoMatrix fisher_via_alpha(const ParametricFamily& fam, const ParamVec& theta, const NumericsConfig& cfg) {
  fam.require_domain(theta);
  if (fam.obs_dim() != 1) throw DomainError("the α-form of Fisher information needs univariate observations");
  const Eigen::Index p = fam.param_dim();
  const AlphaGrid grid = AlphaGrid::from(cfg);
  ParamMat g = ParamMat::Zero(p, p);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double q = freq_quantile(fam, theta, grid.nodes[k], cfg);
    const ParamVec l = fam.score(obs_vec({q}), theta);
    g += grid.weights[k] * (l * l.transpose());
  }
  return InfoMatrix::from(theta, g);
}

ParamVec stencil_point(const ParametricFamily& fam, const ParamVec& theta, int i, double step) {
  ParamVec t = theta;
  t(i) += step;
  if (!fam.in_domain(t)) {
    throw DomainError(fam.name() + ": θ is too close to the domain boundary for the difference stencil");
  }
  return t;
}

ParamVec jeffreys_gradient(const ParametricFamily& fam, const ParamVec& theta, const NumericsConfig& cfg) {
  const InfoMatrix info = fisher_info(fam, theta, cfg);
  const int p = fam.param_dim();
  ParamVec grad(p);
  for (int r = 0; r < p; ++r) {
    const double h = fd_step(theta(r), cfg.fd_step_theta);
    const ParamVec up = stencil_point(fam, theta, r, h);
    const ParamVec dn = stencil_point(fam, theta, r, -h);
    const ParamMat dg = (fisher_info(fam, up, cfg).g - fisher_info(fam, dn, cfg).g) / (up(r) - dn(r));
    grad(r) = 0.5 * (info.g_inv.cwiseProduct(dg)).sum();
  }
  return grad;
}

}  // namespace pmp
