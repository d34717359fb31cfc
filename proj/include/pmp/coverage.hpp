#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "pmp/family.hpp"
#include "pmp/level_set.hpp"
#include "pmp/quantile_match.hpp"

namespace pmp {

/// Tensor grid over θ. Coordinates flagged in log_coord are laid out
/// uniformly in log θ_i (used for coordinates whose domain is (0, ∞)).
struct GridSpec {
  ParamVec center;      // in working coordinates (log for log_coord entries)
  ParamVec half_width;  // in working coordinates
  int nodes_per_dim = 64;
  std::vector<bool> log_coord;
};

/// Centred at the family estimate, half-width grid_half_width standard
/// errors (times widen), node count from cfg.grid_nodes or the default.
GridSpec auto_grid_spec(const ParametricFamily& fam, std::span<const ObsVec> data, const NumericsConfig& cfg,
                        double widen = 1.0);

struct PosteriorGrid {
  std::vector<ParamVec> nodes;
  std::vector<double> log_lik;  // Σ log f(x_i; θ) at each kept node
  std::vector<double> weights;  // normalised posterior weights
  std::vector<double> log_weights;
  double boundary_mass = 0.0;   // posterior weight on the outer faces of the grid
  std::size_t total_nodes = 0;  // before pruning
  std::string data_digest;

  [[nodiscard]] ParamVec mean() const;
  [[nodiscard]] std::size_t argmax() const;
};

/// Posterior weights ∝ exp(Σ log f(x_i;θ) + λ(θ)) × quadrature weight.
/// Throws GridMisplaced when every weight underflows.
PosteriorGrid posterior_grid(const ParametricFamily& fam, std::span<const ObsVec> data, const PriorField& prior,
                             const GridSpec& spec, const NumericsConfig& cfg);

/// Root of Σ_k w_k (1 − F(q; θ_k)) = α.
double predictive_quantile(const PosteriorGrid& pg, const ParametricFamily& fam, double alpha,
                           const NumericsConfig& cfg);

/// Level-set table of the predictive mixture density about the mode of the
/// heaviest posterior node.
RayTable predictive_table(const PosteriorGrid& pg, const ParametricFamily& fam, const NumericsConfig& cfg);

/// log f_mix(x) = log Σ_k w_k f(x; θ_k).
double predictive_log_density(const PosteriorGrid& pg, const ParametricFamily& fam, const ObsVec& x);

/// Density threshold m with predictive mass α on {f_mix >= m}.
double predictive_hpd_threshold(const PosteriorGrid& pg, const ParametricFamily& fam, double alpha,
                                const NumericsConfig& cfg);

struct CoverageReport {
  std::string family;
  std::string prior;
  MatchKind kind = MatchKind::Quantile;
  ParamVec theta0;
  int n = 0;
  double alpha = 0.0;
  int replicates = 0;
  double coverage_hat = 0.0;  // Rao–Blackwellised
  double se = 0.0;
  double binary_hat = 0.0;  // plain indicator estimator, kept as a cross-check
  double binary_se = 0.0;
  double defect_hat = 0.0;  // n (α − coverage_hat)
  double predicted_defect = 0.0;
  double z_score = 0.0;  // (defect_hat − predicted_defect) / (n se)
  std::uint64_t seed = 0;
  std::string config_hash;
  int retries = 0;
  int failures = 0;
  bool failed = false;  // retry budget exceeded or a replicate could not be placed
};

CoverageReport coverage_mc(const ParametricFamily& fam, const PriorField& prior, const ParamVec& theta0, int n,
                           double alpha, int replicates, std::uint64_t seed, const NumericsConfig& cfg);

CoverageReport coverage_mc_hpd(const ParametricFamily& fam, const PriorField& prior, const ParamVec& theta0, int n,
                               double alpha, int replicates, std::uint64_t seed, const NumericsConfig& cfg);

/// Runs fn(i) for i in [0, count) on up to `workers` threads (0: hardware
/// concurrency). Work is handed out dynamically, so fn must write results
/// by index; the first exception is rethrown after all workers stop.
void parallel_for(std::size_t count, int workers, const std::function<void(std::size_t)>& fn);

}  // namespace pmp
