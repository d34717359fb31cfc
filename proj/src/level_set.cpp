#include "pmp/level_set.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace pmp {

namespace {
constexpr int kMaxPanels = 64;
}

RayTable::RayTable(const ObsVec& center, const LogDensity& logf, const NumericsConfig& cfg,
                   double depth, const LogDensity& scale_logf)
    : dim_(static_cast<int>(center.size())), center_(center), peak_(logf(center)), depth_(depth) {
  if (dim_ != 1 && dim_ != 2) throw DomainError("level sets are supported in one or two dimensions");
  if (!std::isfinite(peak_)) throw NumericFailure("log density is not finite at the region centre");
  if (!(depth > 0.0)) throw DomainError("table depth must be positive");

  const GaussRule rule = gauss_legendre(cfg.hpd_panel_nodes);
  const std::size_t n = rule.nodes.size();
  for (std::size_t j = 0; j < n; ++j) {
    unit_nodes_.push_back(0.5 * (rule.nodes[j] + 1.0));
    unit_weights_.push_back(0.5 * rule.weights[j]);
    const double x = rule.nodes[j];
    const double w = std::sqrt((1.0 - x * x) * rule.weights[j]);
    bary_.push_back(j % 2 == 0 ? w : -w);
  }

  if (dim_ == 1) {
    rays_.push_back(Ray{obs_vec({1.0}), 1.0, {}});
    rays_.push_back(Ray{obs_vec({-1.0}), 1.0, {}});
  } else {
    const int k = cfg.hpd_angles;
    const double dphi = 2.0 * std::numbers::pi / k;
    for (int i = 0; i < k; ++i) {
      const double phi = dphi * i;
      rays_.push_back(Ray{obs_vec({std::cos(phi), std::sin(phi)}), dphi, {}});
    }
  }

  const LogDensity& scale_fn = scale_logf ? scale_logf : logf;
  const double scale_peak = scale_logf ? scale_logf(center) : peak_;
  for (Ray& ray : rays_) {
    auto drop = [&](double r) { return scale_fn(ObsVec(center_ + r * ray.u)) - (scale_peak - 0.5); };
    double hi = 1.0;
    for (int i = 0; i < 200 && drop(hi) > 0.0; ++i) hi *= 2.0;
    double lo = 0.0;
    while (drop(0.5 * hi) < 0.0 && hi > 1e-12) {
      lo = 0.0;
      hi *= 0.5;
    }
    const double a = find_root(drop, lo, hi, cfg.root_tol);
    if (!(a > 0.0)) throw NumericFailure("degenerate level-set scale");

    double plo = 0.0, phi = a;
    for (int pi = 0; pi < kMaxPanels; ++pi) {
      Panel p;
      p.lo = plo;
      p.hi = phi;
      const double width = phi - plo;
      double vmin = kInf;
      for (std::size_t j = 0; j < n; ++j) {
        const double r = plo + unit_nodes_[j] * width;
        const double v = logf(ObsVec(center_ + r * ray.u));
        p.r.push_back(r);
        p.v.push_back(v);
        p.mass += unit_weights_[j] * width * jac(r) * (std::isfinite(v) ? std::exp(v) : 0.0);
        vmin = std::min(vmin, v);
      }
      p.v_lo = interp(p, plo);
      p.v_hi = interp(p, phi);
      ray.panels.push_back(std::move(p));
      if (std::max(vmin, ray.panels.back().v_hi) < peak_ - depth_) break;
      plo = phi;
      phi *= 2.0;
    }
  }
}

double RayTable::interp(const Panel& p, double r) const {
  const double width = p.hi - p.lo;
  const double t = 2.0 * (r - p.lo) / width - 1.0;
  double num = 0.0, den = 0.0;
  for (std::size_t j = 0; j < p.r.size(); ++j) {
    const double xj = 2.0 * unit_nodes_[j] - 1.0;
    const double d = t - xj;
    if (d == 0.0) return p.v[j];
    const double w = bary_[j] / d;
    num += w * p.v[j];
    den += w;
  }
  return num / den;
}

RayTable::Crossing RayTable::crossing(const Ray& ray, double s) const {
  Crossing c;
  const int np = static_cast<int>(ray.panels.size());
  for (int pi = np - 1; pi >= 0; --pi) {
    const Panel& p = ray.panels[static_cast<std::size_t>(pi)];
    // Points in increasing radius: lo, nodes, hi.
    const std::size_t n = p.r.size();
    auto rad = [&](std::size_t i) { return i == 0 ? p.lo : (i == n + 1 ? p.hi : p.r[i - 1]); };
    auto val = [&](std::size_t i) { return i == 0 ? p.v_lo : (i == n + 1 ? p.v_hi : p.v[i - 1]); };
    std::size_t last = n + 2;
    for (std::size_t i = n + 2; i-- > 0;) {
      if (val(i) >= s) {
        last = i;
        break;
      }
    }
    if (last == n + 2) continue;
    c.panel = pi;
    if (last == n + 1) {
      // The level lies at or beyond this panel's outer edge.
      c.r = p.hi;
      c.truncated = pi == np - 1;
      return c;
    }
    const double a = rad(last), b = rad(last + 1);
    auto g = [&](double r) { return interp(p, r) - s; };
    const double ga = g(a), gb = g(b);
    if (ga < 0.0 || gb > 0.0) {
      // Interpolant and tabulated values disagree in sign at a node; fall
      // back to the tabulated bracket end.
      c.r = ga >= 0.0 ? a : b;
      return c;
    }
    c.r = find_root(g, a, b, 1e-300 + 1e-13 * (std::abs(s) + 1.0));
    return c;
  }
  return c;
}

double RayTable::ray_mass(const Ray& ray, double s) const {
  const Crossing c = crossing(ray, s);
  if (c.panel < 0) return 0.0;
  double acc = 0.0;
  for (int pi = 0; pi < c.panel; ++pi) acc += ray.panels[static_cast<std::size_t>(pi)].mass;
  const Panel& p = ray.panels[static_cast<std::size_t>(c.panel)];
  const double width = c.r - p.lo;
  if (width > 0.0) {
    for (std::size_t j = 0; j < unit_nodes_.size(); ++j) {
      const double r = p.lo + unit_nodes_[j] * width;
      acc += unit_weights_[j] * width * jac(r) * std::exp(interp(p, r));
    }
  }
  return acc;
}

double RayTable::mass(double s) const {
  double total = 0.0;
  for (const Ray& ray : rays_) total += ray.weight * ray_mass(ray, s);
  return total;
}

double RayTable::find_level(double alpha, double tol) const {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("level alpha must lie in (0,1)");
  const double lo = floor_level();
  const double hi = peak_;
  const double deepest = mass(lo);
  if (deepest < alpha) {
    throw NumericFailure("level-set table too shallow: deepest tabulated mass " + std::to_string(deepest) +
                         " below requested " + std::to_string(alpha));
  }
  // Near the peak the mass grows like a power of (peak - s), so the level is
  // only resolvable to the mass enclosed a few ulps below the peak.
  const double resolution = mass(hi - 8.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(hi)));
  return find_root([&](double s) { return mass(s) - alpha; }, lo, hi, std::max(tol, 2.0 * resolution));
}

double RayTable::region_mass_err(double s) const {
  double err = 0.0;
  if (dim_ == 2) {
    double full = 0.0, half = 0.0;
    for (std::size_t k = 0; k < rays_.size(); ++k) {
      const double m = rays_[k].weight * ray_mass(rays_[k], s);
      full += m;
      if (k % 2 == 0) half += 2.0 * m;
    }
    err += std::abs(full - half);
  }
  for (const Ray& ray : rays_) {
    if (crossing(ray, s).truncated) err += ray.weight * std::exp(floor_level());
  }
  return err;
}

}  // namespace pmp
