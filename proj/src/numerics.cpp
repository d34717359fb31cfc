#include "pmp/numerics.hpp"

#include <algorithm>
#include <cstdio>
#include <numbers>
#include <string_view>

namespace pmp {

void NumericsConfig::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(std::string(name) + " must be strictly positive");
  };
  positive(quad_abs_tol, "quad_abs_tol");
  positive(quad_rel_tol, "quad_rel_tol");
  positive(window_tail_mass, "window_tail_mass");
  positive(endpoint_clip, "endpoint_clip");
  positive(fd_step_theta, "fd_step_theta");
  positive(root_tol, "root_tol");
  positive(hpd_bisect_tol, "hpd_bisect_tol");
  positive(independence_tol, "independence_tol");
  positive(rank_tol, "rank_tol");
  positive(curl_step, "curl_step");
  positive(curl_tol, "curl_tol");
  positive(path_tol, "path_tol");
  positive(grid_half_width, "grid_half_width");
  positive(grid_boundary_tol, "grid_boundary_tol");
  positive(grid_prune, "grid_prune");
  positive(fd_tol, "fd_tol");
  positive(mass_tol, "mass_tol");
  // Beyond 128 graded nodes the outermost α sit within 1e-9 of 0 and 1, where
  // HPD level sets shrink below the ray-table resolution.
  if (alpha_nodes < 8 || alpha_nodes > 128) throw ConfigError("alpha_nodes must lie in [8, 128]");
  if (endpoint_clip >= 0.5) throw ConfigError("endpoint_clip must be below 0.5");
  if (quad_max_intervals < 1) throw ConfigError("quad_max_intervals must be positive");
  if (hpd_angles < 4 || hpd_angles % 2 != 0) throw ConfigError("hpd_angles must be an even number >= 4");
  if (hpd_panel_nodes < 4) throw ConfigError("hpd_panel_nodes must be at least 4");
  if (path_nodes < 2) throw ConfigError("path_nodes must be at least 2");
  if (grid_nodes < 0) throw ConfigError("grid_nodes must be non-negative");
  if (grid_max_retries < 0) throw ConfigError("grid_max_retries must be non-negative");
  if (ks_samples < 10) throw ConfigError("ks_samples must be at least 10");
  if (workers < 0) throw ConfigError("workers must be non-negative");
}

std::string NumericsConfig::canonical() const {
  std::string out;
  char buf[96];
  visit_fields(*this, [&](const char* name, const auto& v) {
    if (std::string_view(name) == "workers") return;  // results never depend on it
    std::snprintf(buf, sizeof buf, "%s=%.17g\n", name, static_cast<double>(v));
    out += buf;
  });
  return out;
}

GaussRule gauss_legendre(int n) {
  if (n < 1) throw DomainError("Gauss–Legendre rule needs at least one node");
  GaussRule rule;
  rule.nodes.resize(static_cast<std::size_t>(n));
  rule.weights.resize(static_cast<std::size_t>(n));
  const int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = 0.0;
      for (int k = 1; k <= n; ++k) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p2) / k;
      }
      dp = n * (x * p0 - p1) / (x * x - 1.0);
      const double dx = p0 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    // Recompute the derivative at the converged node.
    double p0 = 1.0, p1 = 0.0;
    for (int k = 1; k <= n; ++k) {
      const double p2 = p1;
      p1 = p0;
      p0 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p2) / k;
    }
    dp = n * (x * p0 - p1) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    const auto lo = static_cast<std::size_t>(i);
    const auto hi = static_cast<std::size_t>(n - 1 - i);
    rule.nodes[lo] = -x;
    rule.nodes[hi] = x;
    rule.weights[lo] = w;
    rule.weights[hi] = w;
  }
  if (n % 2 == 1) rule.nodes[static_cast<std::size_t>(n / 2)] = 0.0;
  return rule;
}

AlphaGrid AlphaGrid::make(int count, bool graded) {
  if (count < 8) throw ConfigError("alpha grid needs at least 8 nodes");
  const GaussRule rule = gauss_legendre(count);
  AlphaGrid grid;
  grid.nodes.reserve(rule.nodes.size());
  grid.weights.reserve(rule.nodes.size());
  for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
    const double u = 0.5 * (rule.nodes[k] + 1.0);
    const double w = 0.5 * rule.weights[k];
    if (graded) {
      // Smoothstep map α = u²(3 − 2u) clusters nodes at both ends, where
      // quantile-based integrands carry logarithmic singularities.
      grid.nodes.push_back(u * u * (3.0 - 2.0 * u));
      grid.weights.push_back(w * 6.0 * u * (1.0 - u));
    } else {
      grid.nodes.push_back(u);
      grid.weights.push_back(w);
    }
  }
  return grid;
}

QuadResult<double> integrate_1d(const std::function<double(double)>& fn, double a, double b,
                                const NumericsConfig& cfg) {
  if (!std::isfinite(a) || !std::isfinite(b))
    throw DomainError("integrate_1d needs finite bounds; truncate to the family window first");
  return integrate_adaptive(fn, a, b, cfg.quad_abs_tol, cfg.quad_rel_tol, cfg.quad_max_intervals);
}

std::vector<double> clip_breaks(const std::vector<double>& breaks, double lo, double hi) {
  std::vector<double> out{lo};
  for (double b : breaks)
    if (b > lo && b < hi) out.push_back(b);
  out.push_back(hi);
  std::sort(out.begin() + 1, out.end() - 1);
  return out;
}

double find_root(const std::function<double(double)>& fn, double lo, double hi, double tol,
                 int max_iter) {
  double a = lo, b = hi;
  double fa = fn(a), fb = fn(b);
  if (!std::isfinite(fa) || !std::isfinite(fb)) throw NumericFailure("non-finite value at bracket end");
  if (fa == 0.0) return a;
  if (fb == 0.0) return b;
  if ((fa > 0.0) == (fb > 0.0)) throw NumericFailure("bracket does not straddle a sign change");

  double c = a, fc = fa;
  double d = b - a, e = d;
  for (int iter = 0; iter < max_iter; ++iter) {
    if ((fb > 0.0) == (fc > 0.0)) {
      c = a;
      fc = fa;
      d = e = b - a;
    }
    if (std::abs(fc) < std::abs(fb)) {
      a = b;
      b = c;
      c = a;
      fa = fb;
      fb = fc;
      fc = fa;
    }
    const double xtol = 2.0 * std::numeric_limits<double>::epsilon() * std::abs(b) + 1e-300;
    const double m = 0.5 * (c - b);
    if (std::abs(m) <= xtol || fb == 0.0) break;
    if (std::abs(e) >= xtol && std::abs(fa) > std::abs(fb)) {
      double p, q, r;
      const double s = fb / fa;
      if (a == c) {
        p = 2.0 * m * s;
        q = 1.0 - s;
      } else {
        q = fa / fc;
        r = fb / fc;
        p = s * (2.0 * m * q * (q - r) - (b - a) * (r - 1.0));
        q = (q - 1.0) * (r - 1.0) * (s - 1.0);
      }
      if (p > 0.0) q = -q;
      p = std::abs(p);
      if (2.0 * p < std::min(3.0 * m * q - std::abs(xtol * q), std::abs(e * q))) {
        e = d;
        d = p / q;
      } else {
        d = m;
        e = m;
      }
    } else {
      d = m;
      e = m;
    }
    a = b;
    fa = fb;
    b += std::abs(d) > xtol ? d : (m > 0.0 ? xtol : -xtol);
    fb = fn(b);
    if (!std::isfinite(fb)) throw NumericFailure("non-finite function value during root search");
  }
  if (std::abs(fb) > tol) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "root search stalled: |f(%.17g)| = %.3g exceeds tolerance %.3g", b,
                  std::abs(fb), tol);
    throw NumericFailure(buf);
  }
  return b;
}

std::pair<double, double> expand_bracket(const std::function<double(double)>& fn, double lo,
                                         double hi, int max_steps) {
  if (!(lo < hi)) throw DomainError("expand_bracket needs lo < hi");
  double flo = fn(lo), fhi = fn(hi);
  for (int step = 0; step < max_steps; ++step) {
    if ((flo > 0.0) != (fhi > 0.0) || flo == 0.0 || fhi == 0.0) return {lo, hi};
    const double w = hi - lo;
    if (std::abs(flo) < std::abs(fhi)) {
      lo -= w;
      flo = fn(lo);
    } else {
      hi += w;
      fhi = fn(hi);
    }
  }
  throw NumericFailure("could not bracket a sign change");
}

ParamVec fd_gradient(const std::function<double(const ParamVec&)>& fn, const ParamVec& theta,
                     const NumericsConfig& cfg) {
  ParamVec grad(theta.size());
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    const double h = fd_step(theta(i), cfg.fd_step_theta);
    ParamVec up = theta, dn = theta;
    up(i) += h;
    dn(i) -= h;
    grad(i) = (fn(up) - fn(dn)) / (up(i) - dn(i));
  }
  return grad;
}

ParamMat matrix_inverse(const ParamMat& m, double max_condition) {
  if (m.rows() != m.cols() || m.rows() == 0) throw DomainError("inverse needs a non-empty square matrix");
  Eigen::JacobiSVD<ParamMat> svd(m);
  const auto& s = svd.singularValues();
  const double smax = s(0);
  const double smin = s(s.size() - 1);
  if (!(smin > 0.0) || smax / smin > max_condition) {
    char buf[120];
    std::snprintf(buf, sizeof buf, "matrix is singular to working precision (condition %.3g)",
                  smin > 0.0 ? smax / smin : kInf);
    throw NonRegularModel(buf);
  }
  return m.inverse();
}

ParamVec symmetric_eigenvalues(const ParamMat& m) {
  Eigen::SelfAdjointEigenSolver<ParamMat> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

double determinant(const ParamMat& m) { return m.determinant(); }

std::uint64_t fnv1a(const std::string& bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace pmp
