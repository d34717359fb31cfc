#include "pmp/coverage.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <exception>
#include <mutex>
#include <thread>

#include "pmp/fisher.hpp"
#include "pmp/hpd_match.hpp"

namespace pmp {

namespace {

double log_sum_exp(const std::vector<double>& v) {
  double m = -kInf;
  for (double x : v) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

std::string digest(std::span<const ObsVec> data) {
  std::string bytes;
  for (const ObsVec& x : data) {
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      char b[sizeof(double)];
      const double v = x(i);
      std::memcpy(b, &v, sizeof v);
      bytes.append(b, sizeof b);
    }
  }
  return hex64(fnv1a(bytes));
}

std::string run_hash(const ParametricFamily& fam, const PriorField& prior, MatchKind kind, const ParamVec& theta0,
                     int n, double alpha, int replicates, std::uint64_t seed, const NumericsConfig& cfg) {
  std::string s = fam.name() + "|" + prior.name + "|" + to_string(kind) + "|";
  char buf[64];
  for (Eigen::Index i = 0; i < theta0.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g,", theta0(i));
    s += buf;
  }
  std::snprintf(buf, sizeof buf, "|%d|%.17g|%d|%llu|", n, alpha, replicates, static_cast<unsigned long long>(seed));
  s += buf;
  return hex64(fnv1a(s + cfg.canonical()));
}

// Coverage term of one replicate: the Rao–Blackwellised probability and the
// plain indicator.
struct ReplicateResult {
  double rb = 0.0;
  double indicator = 0.0;
  int retries = 0;
  bool failed = false;
};

template <class Region>
CoverageReport run_coverage(const ParametricFamily& fam, const PriorField& prior, MatchKind kind,
                            const ParamVec& theta0, int n, double alpha, int replicates, std::uint64_t seed,
                            const NumericsConfig& cfg, Region&& region) {
  cfg.validate();
  fam.require_domain(theta0);
  if (replicates < 100) throw ConfigError("coverage needs at least 100 replicates");
  if (n < 1) throw ConfigError("sample size must be positive");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0,1)");

  std::vector<ReplicateResult> results(static_cast<std::size_t>(replicates));
  parallel_for(results.size(), cfg.workers, [&](std::size_t i) {
    RngStream rng(seed, i);
    std::vector<ObsVec> data;
    data.reserve(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) data.push_back(fam.sample(theta0, rng));
    const ObsVec next = fam.sample(theta0, rng);
    ReplicateResult& out = results[i];
    double widen = 1.0;
    for (int attempt = 0; attempt <= cfg.grid_max_retries; ++attempt) {
      try {
        const PosteriorGrid pg = posterior_grid(fam, data, prior, auto_grid_spec(fam, data, cfg, widen), cfg);
        if (pg.boundary_mass > cfg.grid_boundary_tol) throw GridMisplaced("posterior mass on the grid boundary");
        const auto [rb, hit] = region(pg, next);
        out.rb = rb;
        out.indicator = hit ? 1.0 : 0.0;
        return;
      } catch (const GridMisplaced&) {
        ++out.retries;
        widen *= 1.5;
      } catch (const NumericFailure&) {
        break;
      }
    }
    out.failed = true;
  });

  CoverageReport rep;
  rep.family = fam.name();
  rep.prior = prior.name;
  rep.kind = kind;
  rep.theta0 = theta0;
  rep.n = n;
  rep.alpha = alpha;
  rep.replicates = replicates;
  rep.seed = seed;
  rep.config_hash = run_hash(fam, prior, kind, theta0, n, alpha, replicates, seed, cfg);

  double s_rb = 0.0, s_ind = 0.0;
  int used = 0;
  for (const ReplicateResult& r : results) {
    rep.retries += r.retries > 0 ? 1 : 0;
    if (r.failed) {
      ++rep.failures;
      continue;
    }
    s_rb += r.rb;
    s_ind += r.indicator;
    ++used;
  }
  if (used < 2) throw GridMisplaced("no replicate produced a usable posterior grid");
  rep.coverage_hat = s_rb / used;
  rep.binary_hat = s_ind / used;
  double v_rb = 0.0, v_ind = 0.0;
  for (const ReplicateResult& r : results) {
    if (r.failed) continue;
    v_rb += (r.rb - rep.coverage_hat) * (r.rb - rep.coverage_hat);
    v_ind += (r.indicator - rep.binary_hat) * (r.indicator - rep.binary_hat);
  }
  rep.se = std::sqrt(v_rb / (used - 1) / used);
  rep.binary_se = std::sqrt(v_ind / (used - 1) / used);
  rep.defect_hat = n * (alpha - rep.coverage_hat);
  rep.predicted_defect = kind == MatchKind::Quantile ? quantile_residual(fam, prior, theta0, alpha, cfg)
                                                     : hpd_residual(fam, prior, theta0, alpha, cfg);
  rep.z_score = rep.se > 0.0 ? (rep.defect_hat - rep.predicted_defect) / (n * rep.se) : 0.0;
  rep.failed = rep.failures > 0 || rep.retries > replicates / 100;
  return rep;
}

}  // namespace

GridSpec auto_grid_spec(const ParametricFamily& fam, std::span<const ObsVec> data, const NumericsConfig& cfg,
                        double widen) {
  const int p = fam.param_dim();
  GridSpec spec;
  spec.nodes_per_dim = cfg.grid_nodes > 0 ? cfg.grid_nodes : (p <= 2 ? 64 : 16);
  ParamVec est = fam.estimate(data);
  // Keep the centre strictly inside the domain.
  for (int i = 0; i < p; ++i) {
    const Interval& d = fam.param_domain()[static_cast<std::size_t>(i)];
    if (!d.contains_open(est(i))) {
      const double lo = std::isfinite(d.lo) ? d.lo : -1e300;
      const double hi = std::isfinite(d.hi) ? d.hi : 1e300;
      est(i) = std::clamp(est(i), lo + 1e-8 * (1.0 + std::abs(lo)), hi - 1e-8 * (1.0 + std::abs(hi)));
    }
  }
  ParamMat g;
  try {
    g = fam.oracles().fisher ? fam.oracles().fisher(est) : fisher_info(fam, est, cfg).g;
  } catch (const Error&) {
    g = ParamMat::Identity(p, p);
  }
  ParamMat cov;
  try {
    cov = matrix_inverse(g) / static_cast<double>(data.size());
  } catch (const Error&) {
    cov = ParamMat::Identity(p, p) / static_cast<double>(data.size());
  }
  spec.center.resize(p);
  spec.half_width.resize(p);
  spec.log_coord.assign(static_cast<std::size_t>(p), false);
  for (int i = 0; i < p; ++i) {
    const Interval& d = fam.param_domain()[static_cast<std::size_t>(i)];
    double se = std::sqrt(std::max(cov(i, i), 0.0));
    if (!(se > 0.0) || !std::isfinite(se)) se = 1.0;
    if (d.lo == 0.0 && d.hi == kInf) {
      spec.log_coord[static_cast<std::size_t>(i)] = true;
      spec.center(i) = std::log(est(i));
      spec.half_width(i) = cfg.grid_half_width * widen * se / est(i);
    } else {
      spec.center(i) = est(i);
      spec.half_width(i) = cfg.grid_half_width * widen * se;
    }
  }
  return spec;
}

ParamVec PosteriorGrid::mean() const {
  ParamVec m = ParamVec::Zero(nodes.empty() ? 0 : nodes.front().size());
  for (std::size_t k = 0; k < nodes.size(); ++k) m += weights[k] * nodes[k];
  return m;
}

std::size_t PosteriorGrid::argmax() const {
  return static_cast<std::size_t>(std::max_element(weights.begin(), weights.end()) - weights.begin());
}

PosteriorGrid posterior_grid(const ParametricFamily& fam, std::span<const ObsVec> data, const PriorField& prior,
                             const GridSpec& spec, const NumericsConfig& cfg) {
  const int p = fam.param_dim();
  if (spec.center.size() != p || spec.half_width.size() != p || spec.log_coord.size() != static_cast<std::size_t>(p))
    throw ConfigError("grid spec does not match the parameter dimension");
  if (spec.nodes_per_dim < 1) throw ConfigError("grid needs at least one node per dimension");
  const int N = spec.nodes_per_dim;

  std::vector<std::vector<double>> coord(static_cast<std::size_t>(p)), logw(static_cast<std::size_t>(p));
  for (int i = 0; i < p; ++i) {
    auto& c = coord[static_cast<std::size_t>(i)];
    auto& w = logw[static_cast<std::size_t>(i)];
    if (N == 1) {
      c.push_back(spec.center(i));
      w.push_back(0.0);
      continue;
    }
    const double lo = spec.center(i) - spec.half_width(i);
    const double step = 2.0 * spec.half_width(i) / (N - 1);
    for (int j = 0; j < N; ++j) {
      c.push_back(lo + step * j);
      w.push_back(std::log(step * ((j == 0 || j == N - 1) ? 0.5 : 1.0)));
    }
  }

  PosteriorGrid pg;
  pg.data_digest = digest(data);
  std::vector<double> logpost;
  std::vector<bool> on_face;
  std::vector<int> idx(static_cast<std::size_t>(p), 0);
  std::size_t total = 1;
  for (int i = 0; i < p; ++i) total *= static_cast<std::size_t>(N);
  pg.total_nodes = total;
  for (std::size_t flat = 0; flat < total; ++flat) {
    std::size_t rem = flat;
    ParamVec theta(p);
    double lw = 0.0;
    bool face = false;
    for (int i = 0; i < p; ++i) {
      const int j = static_cast<int>(rem % static_cast<std::size_t>(N));
      rem /= static_cast<std::size_t>(N);
      const double u = coord[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      lw += logw[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      if (spec.log_coord[static_cast<std::size_t>(i)]) {
        theta(i) = std::exp(u);
        lw += u;  // Jacobian dθ = θ du
      } else {
        theta(i) = u;
      }
      face = face || (N > 1 && (j == 0 || j == N - 1));
    }
    if (!fam.in_domain(theta)) continue;
    double ll = 0.0;
    for (const ObsVec& x : data) ll += fam.log_density(x, theta);
    const double lp = ll + prior.log_prior(theta) + lw;
    if (!std::isfinite(lp)) continue;
    pg.nodes.push_back(theta);
    pg.log_lik.push_back(ll);
    logpost.push_back(lp);
    on_face.push_back(face);
  }
  if (logpost.empty()) throw GridMisplaced("every posterior grid weight underflowed");
  const double norm = log_sum_exp(logpost);
  if (!std::isfinite(norm)) throw GridMisplaced("posterior normalisation is not finite");

  // Prune negligible nodes, then renormalise.
  PosteriorGrid kept;
  kept.data_digest = pg.data_digest;
  kept.total_nodes = pg.total_nodes;
  double sum = 0.0;
  for (std::size_t k = 0; k < logpost.size(); ++k) {
    const double w = std::exp(logpost[k] - norm);
    if (on_face[k]) kept.boundary_mass += w;
    if (w < cfg.grid_prune) continue;
    kept.nodes.push_back(pg.nodes[k]);
    kept.log_lik.push_back(pg.log_lik[k]);
    kept.weights.push_back(w);
    sum += w;
  }
  for (double& w : kept.weights) {
    w /= sum;
    kept.log_weights.push_back(std::log(w));
  }
  return kept;
}

double predictive_quantile(const PosteriorGrid& pg, const ParametricFamily& fam, double alpha,
                           const NumericsConfig& cfg) {
  if (fam.obs_dim() != 1) throw DomainError("predictive quantiles need univariate observations");
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0,1)");
  const double tail = std::min({cfg.window_tail_mass, 0.5 * alpha, 0.5 * (1.0 - alpha)});
  double lo = kInf, hi = -kInf;
  for (const ParamVec& t : pg.nodes) {
    const Box w = fam.window(t, tail);
    lo = std::min(lo, w[0].lo);
    hi = std::max(hi, w[0].hi);
  }
  auto fn = [&](double q) {
    double s = 0.0;
    for (std::size_t k = 0; k < pg.nodes.size(); ++k) s += pg.weights[k] * fam.survival(q, pg.nodes[k]);
    return s - alpha;
  };
  if (!(fn(lo) >= 0.0 && fn(hi) <= 0.0)) std::tie(lo, hi) = expand_bracket(fn, lo, hi);
  return find_root(fn, lo, hi, cfg.root_tol);
}

double predictive_log_density(const PosteriorGrid& pg, const ParametricFamily& fam, const ObsVec& x) {
  // Single pass log-sum-exp with a running maximum.
  double m = -kInf, s = 0.0;
  for (std::size_t k = 0; k < pg.nodes.size(); ++k) {
    const double v = pg.log_weights[k] + fam.log_density(x, pg.nodes[k]);
    if (v <= m) {
      s += std::exp(v - m);
    } else {
      s = s * std::exp(m - v) + 1.0;
      m = v;
    }
  }
  return m + std::log(s);
}

RayTable predictive_table(const PosteriorGrid& pg, const ParametricFamily& fam, const NumericsConfig& cfg) {
  if (pg.nodes.empty()) throw GridMisplaced("empty posterior grid");
  const ParamVec anchor = pg.nodes[pg.argmax()];
  return RayTable(
      fam.mode(anchor), [&](const ObsVec& x) { return predictive_log_density(pg, fam, x); }, cfg, 20.0,
      [&](const ObsVec& x) { return fam.log_density(x, anchor); });
}

double predictive_hpd_threshold(const PosteriorGrid& pg, const ParametricFamily& fam, double alpha,
                                const NumericsConfig& cfg) {
  const RayTable table = predictive_table(pg, fam, cfg);
  return std::exp(table.find_level(alpha, cfg.hpd_bisect_tol));
}

CoverageReport coverage_mc(const ParametricFamily& fam, const PriorField& prior, const ParamVec& theta0, int n,
                           double alpha, int replicates, std::uint64_t seed, const NumericsConfig& cfg) {
  if (fam.obs_dim() != 1) throw DomainError("quantile coverage needs univariate observations");
  return run_coverage(fam, prior, MatchKind::Quantile, theta0, n, alpha, replicates, seed, cfg,
                      [&](const PosteriorGrid& pg, const ObsVec& next) {
                        const double q = predictive_quantile(pg, fam, alpha, cfg);
                        return std::pair{fam.survival(q, theta0), next(0) > q};
                      });
}

CoverageReport coverage_mc_hpd(const ParametricFamily& fam, const PriorField& prior, const ParamVec& theta0, int n,
                               double alpha, int replicates, std::uint64_t seed, const NumericsConfig& cfg) {
  return run_coverage(fam, prior, MatchKind::Hpd, theta0, n, alpha, replicates, seed, cfg,
                      [&](const PosteriorGrid& pg, const ObsVec& next) {
                        const RayTable table = predictive_table(pg, fam, cfg);
                        const double s = table.find_level(alpha, cfg.hpd_bisect_tol);
                        const double rb = table.integrate(
                            s, 0.0, [&](const ObsVec& x, double) { return fam.density(x, theta0); });
                        return std::pair{rb, predictive_log_density(pg, fam, next) >= s};
                      });
}

void parallel_for(std::size_t count, int workers, const std::function<void(std::size_t)>& fn) {
  std::size_t threads = workers > 0 ? static_cast<std::size_t>(workers)
                                    : std::max<std::size_t>(1, std::thread::hardware_concurrency());
  threads = std::min(threads, count);
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count && !stop; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          stop = true;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace pmp
