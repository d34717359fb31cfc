#pragma once

#include <functional>
#include <string>
#include <vector>

#include "pmp/family.hpp"
#include "pmp/fisher.hpp"
#include "pmp/numerics.hpp"

namespace pmp {

/// q(θ,α): the upper α point, 1 − F(q;θ) = α.
double freq_quantile(const ParametricFamily& fam, const ParamVec& theta, double alpha, const NumericsConfig& cfg);

struct QuantileSlice {
  ParamVec theta;
  double alpha = 0.0;
  double q = 0.0;
  ParamVec mu;              // μ_t = ∫_q^∞ f_t(u;θ) du
  double quad_error = 0.0;  // quadrature error estimate of μ
  bool identity_checked = false;
  double identity_error = 0.0;  // max_t |μ_t + F_t(q;θ)| when checked
};

QuantileSlice quantile_slice(const ParametricFamily& fam, const ParamVec& theta, double alpha,
                             const NumericsConfig& cfg);
ParamVec mu_vector(const ParametricFamily& fam, const ParamVec& theta, double alpha, const NumericsConfig& cfg);

/// The prior-free part of a matching residual at one θ over a list of α:
/// the flux F^s = g^{st} v_t (v = μ for quantile matching, ξ for HPD
/// matching) and its divergence ∂_s F^s by central differences of the
/// assembled product. For a prior λ the residual is F·∇λ + div F.
struct FluxSlice {
  ParamVec theta;
  std::vector<double> alphas;
  std::vector<ParamVec> flux;
  std::vector<double> divergence;
  std::vector<double> err_est;

  [[nodiscard]] double residual(std::size_t k, const ParamVec& grad_lambda) const {
    return flux[k].dot(grad_lambda) + divergence[k];
  }
};

FluxSlice quantile_flux(const ParametricFamily& fam, const ParamVec& theta, const std::vector<double>& alphas,
                        const NumericsConfig& cfg);

/// ε = g^{st}μ_t ∂_sλ + ∂_s{g^{st}μ_t}; zero exactly when the prior matches
/// at level α to first order.
double quantile_residual(const ParametricFamily& fam, const PriorField& prior, const ParamVec& theta,
                         double alpha, const NumericsConfig& cfg);

enum class MatchKind { Quantile, Hpd };
std::string to_string(MatchKind kind);

struct ResidualCell {
  ParamVec theta;
  double alpha = 0.0;
  double epsilon = 0.0;
  double err_est = 0.0;
};

struct ResidualReport {
  std::string family;
  std::string prior;
  MatchKind kind = MatchKind::Quantile;
  std::vector<ResidualCell> cells;

  [[nodiscard]] double sup_norm() const;
  [[nodiscard]] double max_err_est() const;
};

/// Assembles a report for one prior from precomputed flux slices.
ResidualReport residual_report(const ParametricFamily& fam, const PriorField& prior, MatchKind kind,
                               const std::vector<FluxSlice>& fluxes);

/// {0.05, 0.10, ..., 0.95}.
std::vector<double> default_alpha_sweep();

/// h_r = g^{st} ∫ (F_s l_r − F_r l_s) ∂_x l_t dx.
ParamVec h_field(const ParametricFamily& fam, const ParamVec& theta, const NumericsConfig& cfg);

/// ∂_rλ = ∂_rλ^J + h_r.
ParamVec upmp_gradient(const ParametricFamily& fam, const ParamVec& theta, const NumericsConfig& cfg);

using VectorField = std::function<ParamVec(const ParamVec&)>;

struct GradientTest {
  bool is_gradient = true;
  double max_curl = 0.0;
  ParamVec worst_theta;
};

/// Largest |∂_s v_r − ∂_r v_s| over the grid by central differences.
GradientTest gradient_field_test(const VectorField& field, const std::vector<ParamVec>& grid,
                                 const NumericsConfig& cfg);

struct PathIntegral {
  double value = 0.0;     // along the path that moves coordinates in increasing order
  double path_gap = 0.0;  // |difference| from the reversed coordinate order
};

/// λ(θ) − λ(θ_ref) by Gauss–Legendre line integrals along axis-parallel
/// segments, computed for two coordinate orders.
PathIntegral integrate_field(const VectorField& field, const ParamVec& theta_ref, const ParamVec& theta,
                             const NumericsConfig& cfg);

/// As integrate_field, but throws NotAGradientField when the two paths
/// disagree by more than path_tol.
double reconstruct_log_prior(const VectorField& field, const ParamVec& theta_ref, const ParamVec& theta,
                             const NumericsConfig& cfg);

/// ∂_rλ^J(θ) + h_r(θ₀).
ParamVec local_prior_gradient(const ParametricFamily& fam, const ParamVec& theta, const ParamVec& theta0,
                              const NumericsConfig& cfg);

/// ∫₀¹ (∂²μ_r/∂α²) ε dα over the α-grid, for coordinate r (0-based).
double avg_prediction_error(const ParametricFamily& fam, const PriorField& prior, const ParamVec& theta, int r,
                            const NumericsConfig& cfg);

}  // namespace pmp
