#pragma once

#include <algorithm>
#include <functional>
#include <vector>

#include "pmp/numerics.hpp"
#include "pmp/types.hpp"

namespace pmp {

/// Tabulated geometry of the super-level sets {x : log f(x) >= s} of a
/// density that decreases along every ray from a centre point (unimodal,
/// star-shaped level sets). In 1-D the rays are ±1; in 2-D they are
/// hpd_angles equally spaced directions, integrated with the periodic
/// trapezoid rule. Along each ray log f is tabulated on geometric panels
/// [0,a], [a,2a], [2a,4a], ... with Gauss–Legendre nodes, where a is the
/// radius at which log f has dropped by one half. Values between nodes come
/// from barycentric interpolation, so once the table is built every level
/// query is cheap.
class RayTable {
 public:
  using LogDensity = std::function<double(const ObsVec&)>;

  /// scale_logf, when given, fixes the panel scale instead of logf; it lets
  /// a costly mixture reuse the scale of one of its components.
  RayTable(const ObsVec& center, const LogDensity& logf, const NumericsConfig& cfg,
           double depth = 40.0, const LogDensity& scale_logf = {});

  [[nodiscard]] int dim() const { return dim_; }
  [[nodiscard]] double peak() const { return peak_; }
  /// Deepest tabulated log level.
  [[nodiscard]] double floor_level() const { return peak_ - depth_; }

  /// Mass of {log f >= s}.
  [[nodiscard]] double mass(double s) const;

  /// Log level s with mass(s) = alpha to within tol.
  [[nodiscard]] double find_level(double alpha, double tol) const;

  /// ∫_{log f >= s} fn(x, log f(x)) dx. The log f value handed to fn is the
  /// tabulated or interpolated one.
  template <class T, class F>
  T integrate(double s, T zero, F&& fn) const;

  /// Boundary average Σ_k w_k r_k^{d-1} fn(x_k) / |∂_r log f| normalised by
  /// the same weights without fn. For fn = score this is ∂ξ/∂α.
  template <class T, class F>
  T boundary_average(double s, T zero, F&& fn) const;

  /// Disagreement between the full angular rule and the rule on every other
  /// ray, plus any mass cut off by the table depth.
  [[nodiscard]] double region_mass_err(double s) const;

 private:
  struct Panel {
    double lo = 0.0, hi = 0.0;
    std::vector<double> r;  // nodes
    std::vector<double> v;  // log f at nodes
    double v_lo = 0.0, v_hi = 0.0;
    double mass = 0.0;  // full-panel mass
  };
  struct Ray {
    ObsVec u;
    double weight = 0.0;
    std::vector<Panel> panels;
  };
  struct Crossing {
    int panel = -1;  // -1: empty ray
    double r = 0.0;
    bool truncated = false;
  };

  [[nodiscard]] double interp(const Panel& p, double r) const;
  [[nodiscard]] Crossing crossing(const Ray& ray, double s) const;
  [[nodiscard]] double ray_mass(const Ray& ray, double s) const;
  [[nodiscard]] double jac(double r) const { return dim_ == 1 ? 1.0 : r; }

  int dim_;
  ObsVec center_;
  double peak_;
  double depth_;
  std::vector<double> unit_nodes_;    // GL nodes on [0,1]
  std::vector<double> unit_weights_;  // GL weights on [0,1]
  std::vector<double> bary_;          // barycentric weights of the nodes
  std::vector<Ray> rays_;
};

template <class T, class F>
T RayTable::integrate(double s, T zero, F&& fn) const {
  T total = zero;
  const std::size_t n = unit_nodes_.size();
  for (const Ray& ray : rays_) {
    const Crossing c = crossing(ray, s);
    if (c.panel < 0) continue;
    T acc = zero;
    for (int pi = 0; pi < c.panel; ++pi) {
      const Panel& p = ray.panels[static_cast<std::size_t>(pi)];
      const double width = p.hi - p.lo;
      for (std::size_t j = 0; j < n; ++j) {
        const ObsVec x = center_ + p.r[j] * ray.u;
        acc = acc + fn(x, p.v[j]) * (unit_weights_[j] * width * jac(p.r[j]));
      }
    }
    const Panel& p = ray.panels[static_cast<std::size_t>(c.panel)];
    const double width = c.r - p.lo;
    if (width > 0.0) {
      for (std::size_t j = 0; j < n; ++j) {
        const double r = p.lo + unit_nodes_[j] * width;
        const ObsVec x = center_ + r * ray.u;
        acc = acc + fn(x, interp(p, r)) * (unit_weights_[j] * width * jac(r));
      }
    }
    total = total + acc * ray.weight;
  }
  return total;
}

template <class T, class F>
T RayTable::boundary_average(double s, T zero, F&& fn) const {
  T num = zero;
  double den = 0.0;
  for (const Ray& ray : rays_) {
    const Crossing c = crossing(ray, s);
    if (c.panel < 0) continue;
    const Panel& p = ray.panels[static_cast<std::size_t>(c.panel)];
    const double h = 1e-6 * (p.hi - p.lo);
    // One-sided near the panel ends; tiny regions put the crossing at the centre.
    const double r_lo = std::max(p.lo, c.r - h), r_hi = std::min(p.hi, c.r + h);
    const double slope = (interp(p, r_hi) - interp(p, r_lo)) / (r_hi - r_lo);
    if (!(slope < 0.0)) continue;
    const double w = ray.weight * jac(c.r) / -slope;
    num = num + fn(ObsVec(center_ + c.r * ray.u)) * w;
    den += w;
  }
  if (!(den > 0.0)) throw NumericFailure("level set has no regular boundary point");
  return num * (1.0 / den);
}

}  // namespace pmp
