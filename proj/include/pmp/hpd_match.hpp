#pragma once

#include <string>
#include <vector>

#include "pmp/family.hpp"
#include "pmp/level_set.hpp"
#include "pmp/quantile_match.hpp"

namespace pmp {

/// Level-set table of f(·;θ) about the family mode.
RayTable hpd_table(const ParametricFamily& fam, const ParamVec& theta, const NumericsConfig& cfg);

struct HpdSlice {
  ParamVec theta;
  double alpha = 0.0;
  double m = 0.0;     // density threshold
  ParamVec xi;        // ξ_t = ∫_{f >= m} f_t dx
  double region_mass_err = 0.0;
};

HpdSlice hpd_slice(const ParametricFamily& fam, const ParamVec& theta, double alpha, const NumericsConfig& cfg);
HpdSlice hpd_slice(const ParametricFamily& fam, const RayTable& table, const ParamVec& theta, double alpha,
                   const NumericsConfig& cfg);

double hpd_threshold(const ParametricFamily& fam, const ParamVec& theta, double alpha, const NumericsConfig& cfg);
ParamVec xi_vector(const ParametricFamily& fam, const ParamVec& theta, double alpha, const NumericsConfig& cfg);

/// ∂ξ/∂α at level α: the score averaged over the region boundary with
/// weights r^{d-1}/|∂_r log f|.
ParamVec xi_alpha_derivative(const ParametricFamily& fam, const RayTable& table, const ParamVec& theta,
                             double alpha, const NumericsConfig& cfg);

FluxSlice hpd_flux(const ParametricFamily& fam, const ParamVec& theta, const std::vector<double>& alphas,
                   const NumericsConfig& cfg);

/// ε = g^{st}ξ_t ∂_sλ + ∂_s{g^{st}ξ_t}.
double hpd_residual(const ParametricFamily& fam, const PriorField& prior, const ParamVec& theta, double alpha,
                    const NumericsConfig& cfg);

struct BMatrix {
  ParamVec theta;
  ParamMat b;
  ParamVec eigenvalues;  // ascending
  double min_eigenvalue = 0.0;
  double trace = 0.0;
  /// λ_min/tr(b), taken as 0 when tr(b) is negligible against tr(g).
  double ratio = 0.0;
  double independence_tol = 0.0;
  [[nodiscard]] bool independent() const { return ratio > independence_tol; }
};

/// b_ij = ∫₀¹ (∂ξ_i/∂α)(∂ξ_j/∂α) dα on the α-grid.
BMatrix b_matrix(const ParametricFamily& fam, const ParamVec& theta, const NumericsConfig& cfg);

/// ∂_jλ = −(g b⁻¹ c)_j with c_r = ∫₀¹ ∂_αξ_r ∂_s(g^{st}∂_αξ_t) dα. Throws
/// LinearlyDependentXi when b is singular.
ParamVec hpd_upmp_gradient(const ParametricFamily& fam, const ParamVec& theta, const NumericsConfig& cfg);

enum class SeparableForm { None, Eq41, Eq46, Eq47 };
std::string to_string(SeparableForm form);

struct SeparabilityReport {
  SeparableForm form = SeparableForm::None;
  double evidence = 0.0;       // σ₂/σ₁ of the test that decided the form
  double common_profile = 0.0; // σ₂/σ₁ with every (θ, t) row stacked
  double per_theta = 0.0;      // worst σ₂/σ₁ of the p×K matrix at one θ
  std::vector<double> per_row; // σ₂/σ₁ of row t stacked across θ
  std::vector<bool> row_zero;  // row t vanishes on the whole grid
};

/// Numerical rank tests on ξ_t(θ, α) over the θ-grid and the default α sweep.
SeparabilityReport separability_diagnosis(const ParametricFamily& fam, const std::vector<ParamVec>& grid,
                                          const NumericsConfig& cfg);

}  // namespace pmp
