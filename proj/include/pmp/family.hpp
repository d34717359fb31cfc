#pragma once

#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "pmp/numerics.hpp"
#include "pmp/rng.hpp"
#include "pmp/types.hpp"

namespace pmp {

/// A named log-prior λ(θ) = log π(θ), defined up to an additive constant.
struct PriorField {
  std::string name;
  std::function<double(const ParamVec&)> log_prior;
  std::function<ParamVec(const ParamVec&)> log_prior_gradient;

  /// Builds a prior whose gradient is taken by central differences of
  /// log_prior.
  static PriorField from_log(std::string name, std::function<double(const ParamVec&)> log_prior,
                             double fd_rel_step = 6.0554544523933395e-06);
};

/// Closed-form ground truth carried by built-in families. Empty functions
/// mean "not available".
struct FamilyOracles {
  std::function<ParamMat(const ParamVec&)> fisher;
  std::function<double(const ParamVec&, double)> quantile;       // q(θ, α)
  std::function<double(const ParamVec&, double)> hpd_threshold;  // m(θ, α)
  std::function<ParamVec(const ParamVec&, double)> xi;           // ξ(θ, α)
};

/// Uniform evaluation interface for a regular parametric model with
/// θ-independent support. Implementations are immutable and safe to share
/// between threads.
class ParametricFamily {
 public:
  virtual ~ParametricFamily() = default;

  [[nodiscard]] const std::string& name() const { return name_; }
  [[nodiscard]] int param_dim() const { return param_dim_; }
  [[nodiscard]] int obs_dim() const { return obs_dim_; }
  [[nodiscard]] const Box& param_domain() const { return domain_; }
  [[nodiscard]] const std::vector<std::string>& param_names() const { return param_names_; }
  [[nodiscard]] virtual Box support() const { return Box(static_cast<std::size_t>(obs_dim_)); }

  [[nodiscard]] bool in_domain(const ParamVec& theta) const;
  /// Throws DomainError when θ is outside Ω or has the wrong size.
  void require_domain(const ParamVec& theta) const;

  [[nodiscard]] virtual double log_density(const ObsVec& x, const ParamVec& theta) const = 0;
  [[nodiscard]] double density(const ObsVec& x, const ParamVec& theta) const {
    return std::exp(log_density(x, theta));
  }
  /// l_t(x; θ) = ∂_t log f(x; θ).
  [[nodiscard]] virtual ParamVec score(const ObsVec& x, const ParamVec& theta) const = 0;

  // Univariate-only members.
  [[nodiscard]] virtual bool has_score_x_derivative() const { return false; }
  /// ∂l_t/∂x. Falls back to a central difference in x with step
  /// ε^(1/3)·(1 + |x|) when no closed form is supplied.
  [[nodiscard]] virtual ParamVec score_x_derivative(double x, const ParamVec& theta) const;
  [[nodiscard]] virtual bool has_cdf() const { return false; }
  [[nodiscard]] virtual double cdf(double x, const ParamVec& theta) const;
  [[nodiscard]] virtual double survival(double x, const ParamVec& theta) const {
    return 1.0 - cdf(x, theta);
  }
  [[nodiscard]] virtual bool has_cdf_theta_gradient() const { return false; }
  /// F_s(x; θ); central differences of cdf when no closed form exists.
  [[nodiscard]] virtual ParamVec cdf_theta_gradient(double x, const ParamVec& theta) const;

  [[nodiscard]] virtual ObsVec sample(const ParamVec& theta, RngStream& rng) const = 0;
  [[nodiscard]] virtual ObsVec mode(const ParamVec& theta) const = 0;
  /// Integration window whose complement carries at most about tail_mass.
  [[nodiscard]] virtual Box window(const ParamVec& theta, double tail_mass) const = 0;
  /// Per-axis quadrature breakpoints: the ends of the nested windows at tail
  /// masses 10⁻¹, 10⁻², ... down to tail_mass, plus the mode.
  [[nodiscard]] AxisBreaks window_breaks(const ParamVec& theta, double tail_mass) const;
  /// Crude estimator used to centre posterior grids.
  [[nodiscard]] virtual ParamVec estimate(std::span<const ObsVec> data) const = 0;
  [[nodiscard]] virtual ParamVec reference_theta() const = 0;
  [[nodiscard]] virtual std::string description() const { return {}; }

  [[nodiscard]] const std::map<std::string, PriorField>& named_priors() const { return priors_; }
  /// Throws ConfigError for an unknown prior name.
  [[nodiscard]] const PriorField& prior(const std::string& name) const;
  [[nodiscard]] const FamilyOracles& oracles() const { return oracles_; }

 protected:
  ParametricFamily(std::string name, int param_dim, int obs_dim, Box domain,
                   std::vector<std::string> param_names);

  void add_prior(PriorField prior);

  FamilyOracles oracles_;

 private:
  std::string name_;
  int param_dim_;
  int obs_dim_;
  Box domain_;
  std::vector<std::string> param_names_;
  std::map<std::string, PriorField> priors_;
};

using FamilyPtr = std::shared_ptr<const ParametricFamily>;

/// Standardised univariate base density f*(z) used by location-scale
/// combinators.
class BaseDensity {
 public:
  virtual ~BaseDensity() = default;
  [[nodiscard]] virtual std::string name() const = 0;
  [[nodiscard]] virtual double log_pdf(double z) const = 0;
  [[nodiscard]] double pdf(double z) const { return std::exp(log_pdf(z)); }
  /// ψ(z) = d log f*(z) / dz and its derivative.
  [[nodiscard]] virtual double psi(double z) const = 0;
  [[nodiscard]] virtual double dpsi(double z) const = 0;
  [[nodiscard]] virtual double cdf(double z) const = 0;
  [[nodiscard]] virtual double survival(double z) const = 0;
  /// c with P(Z > c) = p.
  [[nodiscard]] virtual double upper_quantile(double p) const = 0;
  [[nodiscard]] virtual double sample(RngStream& rng) const = 0;
  /// Per-unit Fisher information constants E[ψ²], E[(1 + Zψ)²], E[ψ(1 + Zψ)].
  [[nodiscard]] virtual double info_location() const = 0;
  [[nodiscard]] virtual double info_scale() const = 0;
  [[nodiscard]] virtual double info_cross() const { return 0.0; }
  [[nodiscard]] virtual bool symmetric() const { return true; }
  /// True when the sample mean and standard deviation are sensible
  /// location/scale estimators.
  [[nodiscard]] virtual bool moment_estimable() const { return false; }
};

using BasePtr = std::shared_ptr<const BaseDensity>;

/// "normal", "logistic", "t<nu>" or "t(<nu>)" with integer ν in [1, 30].
BasePtr make_base_density(const std::string& name);

enum class ScaleMode { Free, Log, Fixed };

/// Location/scale combinator over a base density:
/// f(x; θ) = σ⁻¹ f*(σ⁻¹(x − μ)). Location is either free or fixed; scale is
/// free (θ = σ), free on the log scale (θ = log σ), or fixed.
struct LocationScaleSpec {
  std::string name;
  std::string base = "normal";
  bool location_free = true;
  double location_value = 0.0;
  ScaleMode scale_mode = ScaleMode::Free;
  double scale_value = 1.0;

  bool operator==(const LocationScaleSpec&) const = default;
};

FamilyPtr make_location_scale_family(const LocationScaleSpec& spec);

/// Names accepted by builtin_family.
std::vector<std::string> builtin_family_names();

/// Throws ConfigError for an unknown name.
FamilyPtr builtin_family(const std::string& name);

struct DiagnosticCheck {
  std::string name;
  double error = 0.0;
  double tolerance = 0.0;
  bool passed = false;
  std::string note;
};

struct FamilyDiagnostic {
  std::string family;
  ParamVec theta;
  std::vector<DiagnosticCheck> checks;
  [[nodiscard]] bool all_passed() const;
};

/// Runs the numerically testable family invariants at θ: density mass,
/// score and cdf-gradient finite-difference consistency, and a
/// Kolmogorov–Smirnov check of the sampler.
FamilyDiagnostic validate_family(const ParametricFamily& fam, const ParamVec& theta,
                                 const NumericsConfig& cfg, std::uint64_t seed = 20061);

}  // namespace pmp
