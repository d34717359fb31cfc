#pragma once

#include "pmp/family.hpp"
#include "pmp/numerics.hpp"

namespace pmp {

/// Per-observation Fisher information g(θ) with its inverse and log-det.
struct InfoMatrix {
  ParamVec theta;
  ParamMat g;
  ParamMat g_inv;
  double log_det = 0.0;
  double quad_error = 0.0;  // largest entrywise quadrature error estimate

  /// Validates positive definiteness and fills g_inv and log_det.
  static InfoMatrix from(const ParamVec& theta, const ParamMat& g, double quad_error = 0.0);
};

/// g_st = ∫ l_s l_t f dx over the family window.
InfoMatrix fisher_info(const ParametricFamily& fam, const ParamVec& theta, const NumericsConfig& cfg);

/// g_ij = ∫₀¹ l_i(q(θ,α)) l_j(q(θ,α)) dα on the α-grid; univariate only.
InfoMatrix fisher_via_alpha(const ParametricFamily& fam, const ParamVec& theta, const NumericsConfig& cfg);

/// ∂_r log|g|^{1/2} = ½ g^{st} ∂_r g_st with ∂_r g by central differences.
ParamVec jeffreys_gradient(const ParametricFamily& fam, const ParamVec& theta, const NumericsConfig& cfg);

/// Central-difference neighbour of θ along coordinate i, kept inside Ω.
/// Throws DomainError when the stencil would leave the domain.
ParamVec stencil_point(const ParametricFamily& fam, const ParamVec& theta, int i, double step);

}  // namespace pmp
