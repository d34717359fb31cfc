#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <queue>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "pmp/types.hpp"

namespace pmp {

/// Tolerances and rule sizes shared by every computation. All reports are
/// reproducible for a fixed config.
struct NumericsConfig {
  // x-quadrature: adaptive Gauss–Kronrod (7/15) on the family window.
  double quad_abs_tol = 1e-10;
  double quad_rel_tol = 1e-12;
  int quad_max_intervals = 4000;
  double window_tail_mass = 1e-12;

  // α-integrals over (0,1).
  int alpha_nodes = 64;
  bool alpha_graded = true;
  double endpoint_clip = 1e-3;

  double fd_step_theta = 6.0554544523933395e-06;  // cbrt(DBL_EPSILON)
  double root_tol = 1e-12;
  double hpd_bisect_tol = 1e-9;

  // Star-shaped level-set integration.
  int hpd_angles = 64;
  int hpd_panel_nodes = 16;

  double independence_tol = 1e-6;  // λ_min(b)/tr(b)
  double rank_tol = 1e-6;          // σ₂/σ₁ in separability tests

  double curl_step = 1e-4;
  double curl_tol = 1e-5;
  int path_nodes = 20;
  double path_tol = 1e-6;

  // Posterior grids for Monte Carlo coverage.
  int grid_nodes = 0;  // 0: 64 per dimension for p <= 2, 16 for p = 3
  double grid_half_width = 12.0;
  double grid_boundary_tol = 1e-6;
  int grid_max_retries = 3;
  double grid_prune = 1e-15;

  // Family validation.
  double fd_tol = 1e-5;
  double mass_tol = 1e-8;
  int ks_samples = 10000;

  int workers = 0;  // 0: hardware concurrency

  void validate() const;
  /// Every field as `name=value` lines with round-trip precision; stable
  /// input for hashes.
  [[nodiscard]] std::string canonical() const;
  bool operator==(const NumericsConfig&) const = default;

  /// Calls v(name, field&) for every field in declaration order.
  template <class Self, class V>
  static void visit_fields(Self& c, V&& v) {
    v("quad_abs_tol", c.quad_abs_tol);
    v("quad_rel_tol", c.quad_rel_tol);
    v("quad_max_intervals", c.quad_max_intervals);
    v("window_tail_mass", c.window_tail_mass);
    v("alpha_nodes", c.alpha_nodes);
    v("alpha_graded", c.alpha_graded);
    v("endpoint_clip", c.endpoint_clip);
    v("fd_step_theta", c.fd_step_theta);
    v("root_tol", c.root_tol);
    v("hpd_bisect_tol", c.hpd_bisect_tol);
    v("hpd_angles", c.hpd_angles);
    v("hpd_panel_nodes", c.hpd_panel_nodes);
    v("independence_tol", c.independence_tol);
    v("rank_tol", c.rank_tol);
    v("curl_step", c.curl_step);
    v("curl_tol", c.curl_tol);
    v("path_nodes", c.path_nodes);
    v("path_tol", c.path_tol);
    v("grid_nodes", c.grid_nodes);
    v("grid_half_width", c.grid_half_width);
    v("grid_boundary_tol", c.grid_boundary_tol);
    v("grid_max_retries", c.grid_max_retries);
    v("grid_prune", c.grid_prune);
    v("fd_tol", c.fd_tol);
    v("mass_tol", c.mass_tol);
    v("ks_samples", c.ks_samples);
    v("workers", c.workers);
  }
};

/// Nodes and weights on [-1, 1].
struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

GaussRule gauss_legendre(int n);

/// Quadrature rule on (0,1) for α-integrals. Nodes strictly increasing and
/// strictly interior; weights sum to one.
struct AlphaGrid {
  std::vector<double> nodes;
  std::vector<double> weights;

  static AlphaGrid make(int count, bool graded);
  static AlphaGrid from(const NumericsConfig& cfg) { return make(cfg.alpha_nodes, cfg.alpha_graded); }
  [[nodiscard]] std::size_t size() const { return nodes.size(); }
};

template <class T>
struct QuadResult {
  T value;
  double error = 0.0;
};

namespace detail {

inline double abs_max(double v) { return std::abs(v); }
template <class Derived>
double abs_max(const Eigen::MatrixBase<Derived>& v) {
  return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff();
}

inline bool all_finite(double v) { return std::isfinite(v); }
template <class Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& v) {
  return v.allFinite();
}

inline constexpr std::array<double, 8> kKronrodNodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kKronrodWeights = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> kGaussWeights = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

template <class F>
auto gauss_kronrod_15(F& fn, double a, double b) {
  using T = std::decay_t<std::invoke_result_t<F&, double>>;
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  auto eval = [&](double x) {
    T v = fn(x);
    if (!all_finite(v)) throw NumericFailure("non-finite integrand value at x=" + std::to_string(x));
    return v;
  };
  T fc = eval(center);
  T kronrod = fc * kKronrodWeights[7];
  T gauss = fc * kGaussWeights[3];
  for (int j = 0; j < 7; ++j) {
    const double dx = half * kKronrodNodes[static_cast<std::size_t>(j)];
    T f1 = eval(center - dx);
    T f2 = eval(center + dx);
    T sum = f1 + f2;
    kronrod = kronrod + sum * kKronrodWeights[static_cast<std::size_t>(j)];
    if (j % 2 == 1) gauss = gauss + sum * kGaussWeights[static_cast<std::size_t>(j / 2)];
  }
  T value = kronrod * half;
  double err = abs_max(T((kronrod - gauss) * half));
  return QuadResult<T>{value, err};
}

}  // namespace detail

/// Globally adaptive Gauss–Kronrod quadrature of a scalar or Eigen-vector
/// valued integrand over [breaks.front(), breaks.back()], starting from the
/// panels between consecutive breakpoints. Seeding with breakpoints keeps a
/// narrow peak on a very wide window from slipping between the first nodes.
/// Throws NumericFailure on a non-finite integrand value.
template <class F>
auto integrate_adaptive(F&& fn, const std::vector<double>& breaks, double abs_tol, double rel_tol,
                        int max_intervals = 4000) {
  using T = std::decay_t<std::invoke_result_t<F&, double>>;
  if (breaks.size() < 2) throw DomainError("integration needs at least two breakpoints");
  if (!(breaks.front() < breaks.back())) {
    if (breaks.front() == breaks.back()) {
      T zero = fn(breaks.front()) * 0.0;
      return QuadResult<T>{zero, 0.0};
    }
    throw DomainError("integration bounds must satisfy a < b");
  }
  struct Segment {
    double a, b;
    QuadResult<T> r;
  };
  auto cmp = [](const Segment& x, const Segment& y) { return x.r.error < y.r.error; };
  std::priority_queue<Segment, std::vector<Segment>, decltype(cmp)> heap(cmp);

  std::optional<T> total;
  double total_err = 0.0;
  int intervals = 0;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    if (!(breaks[i] < breaks[i + 1])) {
      if (breaks[i] == breaks[i + 1]) continue;
      throw DomainError("breakpoints must be non-decreasing");
    }
    auto piece = detail::gauss_kronrod_15(fn, breaks[i], breaks[i + 1]);
    total = total ? T(*total + piece.value) : piece.value;
    total_err += piece.error;
    heap.push({breaks[i], breaks[i + 1], piece});
    ++intervals;
  }
  while (total_err > std::max(abs_tol, rel_tol * detail::abs_max(*total)) && intervals < max_intervals) {
    Segment worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b)) {
      heap.push(worst);
      break;
    }
    auto left = detail::gauss_kronrod_15(fn, worst.a, mid);
    auto right = detail::gauss_kronrod_15(fn, mid, worst.b);
    total = *total - worst.r.value + left.value + right.value;
    total_err += left.error + right.error - worst.r.error;
    heap.push({worst.a, mid, left});
    heap.push({mid, worst.b, right});
    ++intervals;
  }
  // Re-sum to shed the running-update rounding.
  T sum = heap.top().r.value * 0.0;
  double err = 0.0;
  while (!heap.empty()) {
    sum = sum + heap.top().r.value;
    err += heap.top().r.error;
    heap.pop();
  }
  return QuadResult<T>{sum, err};
}

template <class F>
auto integrate_adaptive(F&& fn, double a, double b, double abs_tol, double rel_tol, int max_intervals = 4000) {
  return integrate_adaptive(std::forward<F>(fn), std::vector<double>{a, b}, abs_tol, rel_tol, max_intervals);
}

/// Breakpoints per observation axis.
using AxisBreaks = std::vector<std::vector<double>>;

/// The breakpoints of `breaks` strictly inside (lo, hi), bracketed by lo and hi.
std::vector<double> clip_breaks(const std::vector<double>& breaks, double lo, double hi);

QuadResult<double> integrate_1d(const std::function<double(double)>& fn, double a, double b,
                                const NumericsConfig& cfg);

/// Integrates over a 1-D or 2-D region given by per-axis breakpoints with
/// nested adaptive rules.
template <class F>
auto integrate_box(F&& fn, const AxisBreaks& breaks, const NumericsConfig& cfg) {
  using T = std::decay_t<std::invoke_result_t<F&, const ObsVec&>>;
  if (breaks.size() == 1) {
    auto f1 = [&](double x) { return T(fn(obs_vec({x}))); };
    return integrate_adaptive(f1, breaks[0], cfg.quad_abs_tol, cfg.quad_rel_tol, cfg.quad_max_intervals);
  }
  if (breaks.size() != 2) throw DomainError("integrate_box supports 1-D and 2-D regions only");
  double inner_err = 0.0;
  auto outer = [&](double x1) {
    auto inner = [&](double x2) { return T(fn(obs_vec({x1, x2}))); };
    auto r = integrate_adaptive(inner, breaks[1], 0.1 * cfg.quad_abs_tol, cfg.quad_rel_tol, cfg.quad_max_intervals);
    inner_err = std::max(inner_err, r.error);
    return r.value;
  };
  auto r = integrate_adaptive(outer, breaks[0], cfg.quad_abs_tol, cfg.quad_rel_tol, cfg.quad_max_intervals);
  r.error += inner_err * (breaks[0].back() - breaks[0].front());
  return r;
}

template <class F>
auto integrate_box(F&& fn, const Box& box, const NumericsConfig& cfg) {
  AxisBreaks breaks;
  for (const Interval& iv : box) breaks.push_back({iv.lo, iv.hi});
  return integrate_box(std::forward<F>(fn), breaks, cfg);
}

/// Brent's method with bisection safeguard. Requires fn(lo)·fn(hi) <= 0.
/// Iterates to full x-convergence, then requires |fn(root)| <= tol.
double find_root(const std::function<double(double)>& fn, double lo, double hi, double tol,
                 int max_iter = 300);

/// Grows [lo, hi] outward geometrically until fn changes sign. Returns the
/// bracketing pair or throws NumericFailure.
std::pair<double, double> expand_bracket(const std::function<double(double)>& fn, double lo,
                                         double hi, int max_steps = 80);

/// Central-difference step for coordinate value x.
inline double fd_step(double x, double rel) { return rel * std::max(1.0, std::abs(x)); }

ParamVec fd_gradient(const std::function<double(const ParamVec&)>& fn, const ParamVec& theta,
                     const NumericsConfig& cfg);

/// Small dense linear algebra (dimension <= 3).
ParamMat matrix_inverse(const ParamMat& m, double max_condition = 1e12);
ParamVec symmetric_eigenvalues(const ParamMat& m);  // ascending
double determinant(const ParamMat& m);

/// FNV-1a, used for config hashes and data digests.
std::uint64_t fnv1a(const std::string& bytes, std::uint64_t seed = 14695981039346656037ULL);
std::string hex64(std::uint64_t v);

}  // namespace pmp
