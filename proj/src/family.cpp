#include "pmp/family.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>
#include <numeric>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

namespace pmp {

namespace {

constexpr double kPi = std::numbers::pi;
const double kLogSqrt2Pi = 0.5 * std::log(2.0 * kPi);

double phi(double z) { return std::exp(-0.5 * z * z - kLogSqrt2Pi); }

double normal_upper_quantile(double p) {
  return boost::math::quantile(boost::math::complement(boost::math::normal_distribution<>(0.0, 1.0), p));
}

double median(std::vector<double> v) {
  if (v.empty()) throw DomainError("estimate needs data");
  const auto mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  double m = v[mid];
  if (v.size() % 2 == 0) {
    m = 0.5 * (m + *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid)));
  }
  return m;
}

double quantile_of(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end());
  const double pos = p * static_cast<double>(v.size() - 1);
  const auto i = static_cast<std::size_t>(std::floor(pos));
  const double frac = pos - static_cast<double>(i);
  if (i + 1 >= v.size()) return v.back();
  return v[i] + frac * (v[i + 1] - v[i]);
}

// ---------------------------------------------------------------------------
// Base densities

class NormalBase final : public BaseDensity {
 public:
  std::string name() const override { return "normal"; }
  double log_pdf(double z) const override { return -0.5 * z * z - kLogSqrt2Pi; }
  double psi(double z) const override { return -z; }
  double dpsi(double) const override { return -1.0; }
  double cdf(double z) const override { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }
  double survival(double z) const override { return 0.5 * std::erfc(z / std::numbers::sqrt2); }
  double upper_quantile(double p) const override { return normal_upper_quantile(p); }
  double sample(RngStream& rng) const override { return rng.normal(); }
  double info_location() const override { return 1.0; }
  double info_scale() const override { return 2.0; }
  bool moment_estimable() const override { return true; }
};

class StudentTBase final : public BaseDensity {
 public:
  explicit StudentTBase(int nu)
      : nu_(nu),
        log_norm_(std::lgamma(0.5 * (nu + 1.0)) - std::lgamma(0.5 * nu) - 0.5 * std::log(nu * kPi)),
        dist_(static_cast<double>(nu)) {}

  std::string name() const override { return "t" + std::to_string(nu_); }
  double log_pdf(double z) const override {
    return log_norm_ - 0.5 * (nu_ + 1.0) * std::log1p(z * z / nu_);
  }
  double psi(double z) const override { return -(nu_ + 1.0) * z / (nu_ + z * z); }
  double dpsi(double z) const override {
    const double d = nu_ + z * z;
    return -(nu_ + 1.0) * (nu_ - z * z) / (d * d);
  }
  double cdf(double z) const override {
    if (nu_ == 1) return 0.5 + std::atan(z) / kPi;
    if (nu_ == 2) return 0.5 + z / (2.0 * std::sqrt(2.0 + z * z));
    return boost::math::cdf(dist_, z);
  }
  double survival(double z) const override {
    if (nu_ == 1) return 0.5 - std::atan(z) / kPi;
    if (nu_ == 2) return 0.5 - z / (2.0 * std::sqrt(2.0 + z * z));
    return boost::math::cdf(boost::math::complement(dist_, z));
  }
  double upper_quantile(double p) const override {
    if (nu_ == 1) return std::tan(kPi * (0.5 - p));
    if (nu_ == 2) {
      const double a = 1.0 - 2.0 * p;  // F = 1 − p ⇒ z / sqrt(2 + z²) = a
      return a * std::sqrt(2.0 / (1.0 - a * a));
    }
    return boost::math::quantile(boost::math::complement(dist_, p));
  }
  double sample(RngStream& rng) const override {
    const double z = rng.normal();
    double chi2 = 0.0;
    for (int i = 0; i < nu_; ++i) {
      const double e = rng.normal();
      chi2 += e * e;
    }
    return z / std::sqrt(chi2 / nu_);
  }
  double info_location() const override { return (nu_ + 1.0) / (nu_ + 3.0); }
  double info_scale() const override { return 2.0 * nu_ / (nu_ + 3.0); }

 private:
  int nu_;
  double log_norm_;
  boost::math::students_t_distribution<> dist_;
};

class LogisticBase final : public BaseDensity {
 public:
  std::string name() const override { return "logistic"; }
  double log_pdf(double z) const override {
    const double a = std::abs(z);
    return -a - 2.0 * std::log1p(std::exp(-a));
  }
  double psi(double z) const override { return -std::tanh(0.5 * z); }
  double dpsi(double z) const override {
    const double c = std::cosh(0.5 * z);
    return -0.5 / (c * c);
  }
  double cdf(double z) const override { return 1.0 / (1.0 + std::exp(-z)); }
  double survival(double z) const override { return 1.0 / (1.0 + std::exp(z)); }
  double upper_quantile(double p) const override { return std::log((1.0 - p) / p); }
  double sample(RngStream& rng) const override {
    const double u = rng.uniform();
    return std::log(u / (1.0 - u));
  }
  double info_location() const override { return 1.0 / 3.0; }
  double info_scale() const override { return (kPi * kPi + 3.0) / 9.0; }
};

// ---------------------------------------------------------------------------
// Location-scale combinator

class LocationScaleFamily final : public ParametricFamily {
 public:
  LocationScaleFamily(const LocationScaleSpec& spec, BasePtr base)
      : ParametricFamily(spec.name, dimension(spec), 1, domain(spec), names(spec)),
        spec_(spec),
        base_(std::move(base)) {
    loc_idx_ = spec_.location_free ? 0 : -1;
    scale_idx_ = spec_.scale_mode == ScaleMode::Fixed ? -1 : (spec_.location_free ? 1 : 0);
    install_priors();
    install_oracles();
  }

  double log_density(const ObsVec& x, const ParamVec& th) const override {
    const auto [mu, sigma] = decode(th);
    return base_->log_pdf((x(0) - mu) / sigma) - std::log(sigma);
  }

  ParamVec score(const ObsVec& x, const ParamVec& th) const override {
    const auto [mu, sigma] = decode(th);
    const double z = (x(0) - mu) / sigma;
    const double psi = base_->psi(z);
    ParamVec s(param_dim());
    if (loc_idx_ >= 0) s(loc_idx_) = -psi / sigma;
    if (scale_idx_ >= 0) {
      const double ls = -(1.0 + z * psi) / sigma;
      s(scale_idx_) = spec_.scale_mode == ScaleMode::Log ? sigma * ls : ls;
    }
    return s;
  }

  bool has_score_x_derivative() const override { return true; }
  ParamVec score_x_derivative(double x, const ParamVec& th) const override {
    const auto [mu, sigma] = decode(th);
    const double z = (x - mu) / sigma;
    const double psi = base_->psi(z);
    const double dpsi = base_->dpsi(z);
    ParamVec s(param_dim());
    if (loc_idx_ >= 0) s(loc_idx_) = -dpsi / (sigma * sigma);
    if (scale_idx_ >= 0) {
      const double ds = -(psi + z * dpsi) / (sigma * sigma);
      s(scale_idx_) = spec_.scale_mode == ScaleMode::Log ? sigma * ds : ds;
    }
    return s;
  }

  bool has_cdf() const override { return true; }
  double cdf(double x, const ParamVec& th) const override {
    const auto [mu, sigma] = decode(th);
    return base_->cdf((x - mu) / sigma);
  }
  double survival(double x, const ParamVec& th) const override {
    const auto [mu, sigma] = decode(th);
    return base_->survival((x - mu) / sigma);
  }
  bool has_cdf_theta_gradient() const override { return true; }
  ParamVec cdf_theta_gradient(double x, const ParamVec& th) const override {
    const auto [mu, sigma] = decode(th);
    const double z = (x - mu) / sigma;
    const double f = base_->pdf(z);
    ParamVec s(param_dim());
    if (loc_idx_ >= 0) s(loc_idx_) = -f / sigma;
    if (scale_idx_ >= 0) s(scale_idx_) = spec_.scale_mode == ScaleMode::Log ? -z * f : -z * f / sigma;
    return s;
  }

  ObsVec sample(const ParamVec& th, RngStream& rng) const override {
    const auto [mu, sigma] = decode(th);
    return obs_vec({mu + sigma * base_->sample(rng)});
  }
  ObsVec mode(const ParamVec& th) const override { return obs_vec({decode(th).first}); }

  Box window(const ParamVec& th, double tail_mass) const override {
    const auto [mu, sigma] = decode(th);
    const double c = base_->upper_quantile(0.5 * tail_mass);
    return {Interval{mu - sigma * c, mu + sigma * c}};
  }

  ParamVec estimate(std::span<const ObsVec> data) const override {
    if (data.empty()) throw DomainError("estimate needs data");
    std::vector<double> xs;
    xs.reserve(data.size());
    for (const auto& x : data) xs.push_back(x(0));
    double loc, scale;
    if (base_->moment_estimable()) {
      loc = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
      double ss = 0.0;
      for (double x : xs) ss += (x - loc) * (x - loc);
      scale = xs.size() > 1 ? std::sqrt(ss / static_cast<double>(xs.size() - 1)) : 1.0;
    } else {
      loc = median(xs);
      const double iqr = quantile_of(xs, 0.75) - quantile_of(xs, 0.25);
      scale = xs.size() > 1 ? iqr / (2.0 * base_->upper_quantile(0.25)) : 1.0;
    }
    scale = std::max(scale, 1e-8);
    ParamVec th(param_dim());
    if (loc_idx_ >= 0) th(loc_idx_) = loc;
    if (scale_idx_ >= 0) th(scale_idx_) = spec_.scale_mode == ScaleMode::Log ? std::log(scale) : scale;
    return th;
  }

  ParamVec reference_theta() const override {
    ParamVec th(param_dim());
    if (loc_idx_ >= 0) th(loc_idx_) = 0.0;
    if (scale_idx_ >= 0) th(scale_idx_) = spec_.scale_mode == ScaleMode::Log ? 0.0 : 1.0;
    return th;
  }

  std::string description() const override {
    std::string d = "location-scale model over base density '" + base_->name() + "'";
    d += spec_.location_free ? "; location free" : "; location fixed";
    switch (spec_.scale_mode) {
      case ScaleMode::Free: d += "; scale free"; break;
      case ScaleMode::Log: d += "; log-scale free"; break;
      case ScaleMode::Fixed: d += "; scale fixed"; break;
    }
    return d;
  }

 private:
  static int dimension(const LocationScaleSpec& s) {
    const int p = (s.location_free ? 1 : 0) + (s.scale_mode == ScaleMode::Fixed ? 0 : 1);
    if (p == 0) throw ConfigError("location-scale family needs at least one free parameter");
    return p;
  }
  static Box domain(const LocationScaleSpec& s) {
    Box b;
    if (s.location_free) b.push_back({-kInf, kInf});
    if (s.scale_mode == ScaleMode::Free) b.push_back({0.0, kInf});
    if (s.scale_mode == ScaleMode::Log) b.push_back({-kInf, kInf});
    return b;
  }
  static std::vector<std::string> names(const LocationScaleSpec& s) {
    std::vector<std::string> n;
    if (s.location_free) n.emplace_back("location");
    if (s.scale_mode == ScaleMode::Free) n.emplace_back("scale");
    if (s.scale_mode == ScaleMode::Log) n.emplace_back("log_scale");
    return n;
  }

  std::pair<double, double> decode(const ParamVec& th) const {
    const double mu = loc_idx_ >= 0 ? th(loc_idx_) : spec_.location_value;
    double sigma = spec_.scale_value;
    if (scale_idx_ >= 0) sigma = spec_.scale_mode == ScaleMode::Log ? std::exp(th(scale_idx_)) : th(scale_idx_);
    return {mu, sigma};
  }

  void install_priors() {
    const int si = scale_idx_;
    const bool log_scale = spec_.scale_mode == ScaleMode::Log;
    const bool has_loc = loc_idx_ >= 0;
    const int p = param_dim();
    // λ in the working parameterisation; a log-scale coordinate η = log σ
    // carries the Jacobian σ.
    auto power_prior = [si, log_scale, p](std::string name, double power) {
      // π ∝ σ^(−power) in σ; in η the density is σ^(1−power).
      PriorField f;
      f.name = std::move(name);
      const double exponent = log_scale ? 1.0 - power : -power;
      f.log_prior = [si, log_scale, exponent](const ParamVec& th) {
        if (si < 0) return 0.0;
        const double log_sigma = log_scale ? th(si) : std::log(th(si));
        return exponent * log_sigma;
      };
      f.log_prior_gradient = [si, log_scale, exponent, p](const ParamVec& th) {
        ParamVec g = ParamVec::Zero(p);
        if (si >= 0) g(si) = log_scale ? exponent : exponent / th(si);
        return g;
      };
      return f;
    };
    add_prior(power_prior("uniform", log_scale ? 1.0 : 0.0));
    if (si < 0) {
      add_prior(power_prior("jeffreys", 0.0));
      add_prior(power_prior("right-haar", 0.0));
    } else {
      add_prior(power_prior("right-haar", 1.0));
      add_prior(power_prior("jeffreys", has_loc ? 2.0 : 1.0));
    }
  }

  void install_oracles() {
    const BasePtr base = base_;
    const LocationScaleFamily* self = this;
    const int li = loc_idx_, si = scale_idx_;
    const bool log_scale = spec_.scale_mode == ScaleMode::Log;
    oracles_.fisher = [base, self, li, si, log_scale](const ParamVec& th) {
      const double sigma = self->decode(th).second;
      ParamMat g = ParamMat::Zero(self->param_dim(), self->param_dim());
      const double js = log_scale ? sigma : 1.0;  // ∂σ/∂θ_scale
      if (li >= 0) g(li, li) = base->info_location() / (sigma * sigma);
      if (si >= 0) g(si, si) = base->info_scale() / (sigma * sigma) * js * js;
      if (li >= 0 && si >= 0) g(li, si) = g(si, li) = base->info_cross() / (sigma * sigma) * js;
      return g;
    };
    oracles_.quantile = [base, self](const ParamVec& th, double alpha) {
      const auto [mu, sigma] = self->decode(th);
      return mu + sigma * base->upper_quantile(alpha);
    };
    if (base_->symmetric()) {
      oracles_.hpd_threshold = [base, self](const ParamVec& th, double alpha) {
        const double sigma = self->decode(th).second;
        return base->pdf(base->upper_quantile(0.5 * (1.0 - alpha))) / sigma;
      };
      oracles_.xi = [base, self, li, si, log_scale](const ParamVec& th, double alpha) {
        const double sigma = self->decode(th).second;
        const double c = base->upper_quantile(0.5 * (1.0 - alpha));
        ParamVec xi = ParamVec::Zero(self->param_dim());
        (void)li;
        if (si >= 0) xi(si) = -2.0 * c * base->pdf(c) / (log_scale ? 1.0 : sigma);
        return xi;
      };
    }
  }

  LocationScaleSpec spec_;
  BasePtr base_;
  int loc_idx_ = -1;
  int scale_idx_ = -1;
};

// ---------------------------------------------------------------------------
// N(θ, θ)

class NormalMeanEqVarFamily final : public ParametricFamily {
 public:
  NormalMeanEqVarFamily()
      : ParametricFamily("normal-mean-eq-var", 1, 1, {Interval{0.0, kInf}}, {"theta"}) {
    add_prior(PriorField{"uniform", [](const ParamVec&) { return 0.0; },
                         [](const ParamVec&) { return ParamVec(ParamVec::Zero(1)); }});
    add_prior(PriorField{
        "jeffreys",
        [](const ParamVec& th) { return 0.5 * std::log((2.0 * th(0) + 1.0) / (2.0 * th(0) * th(0))); },
        [](const ParamVec& th) {
          const double t = th(0);
          return param_vec({1.0 / (2.0 * t + 1.0) - 1.0 / t});
        }});
    // g/Q with ξ = Q(θ)R(α), Q = θ⁻¹: the level-free HPD matching prior.
    add_prior(PriorField{
        "hpd-matching", [](const ParamVec& th) { return std::log((2.0 * th(0) + 1.0) / th(0)); },
        [](const ParamVec& th) {
          const double t = th(0);
          return param_vec({2.0 / (2.0 * t + 1.0) - 1.0 / t});
        }});
    oracles_.fisher = [](const ParamVec& th) {
      ParamMat g(1, 1);
      g(0, 0) = (2.0 * th(0) + 1.0) / (2.0 * th(0) * th(0));
      return g;
    };
    oracles_.quantile = [](const ParamVec& th, double alpha) {
      return th(0) + std::sqrt(th(0)) * normal_upper_quantile(alpha);
    };
    oracles_.hpd_threshold = [](const ParamVec& th, double alpha) {
      return phi(normal_upper_quantile(0.5 * (1.0 - alpha))) / std::sqrt(th(0));
    };
    oracles_.xi = [](const ParamVec& th, double alpha) {
      const double c = normal_upper_quantile(0.5 * (1.0 - alpha));
      return param_vec({-c * phi(c) / th(0)});
    };
  }

  double log_density(const ObsVec& x, const ParamVec& th) const override {
    const double t = th(0);
    const double d = x(0) - t;
    return -0.5 * std::log(2.0 * kPi * t) - d * d / (2.0 * t);
  }
  ParamVec score(const ObsVec& x, const ParamVec& th) const override {
    const double t = th(0);
    const double d = x(0) - t;
    return param_vec({-0.5 / t + d / t + d * d / (2.0 * t * t)});
  }
  bool has_score_x_derivative() const override { return true; }
  ParamVec score_x_derivative(double x, const ParamVec& th) const override {
    const double t = th(0);
    return param_vec({1.0 / t + (x - t) / (t * t)});
  }
  bool has_cdf() const override { return true; }
  double cdf(double x, const ParamVec& th) const override {
    return 0.5 * std::erfc(-(x - th(0)) / std::sqrt(2.0 * th(0)));
  }
  double survival(double x, const ParamVec& th) const override {
    return 0.5 * std::erfc((x - th(0)) / std::sqrt(2.0 * th(0)));
  }
  bool has_cdf_theta_gradient() const override { return true; }
  ParamVec cdf_theta_gradient(double x, const ParamVec& th) const override {
    const double t = th(0);
    const double z = (x - t) / std::sqrt(t);
    return param_vec({-phi(z) * (1.0 / std::sqrt(t) + z / (2.0 * t))});
  }
  ObsVec sample(const ParamVec& th, RngStream& rng) const override {
    return obs_vec({th(0) + std::sqrt(th(0)) * rng.normal()});
  }
  ObsVec mode(const ParamVec& th) const override { return obs_vec({th(0)}); }
  Box window(const ParamVec& th, double tail_mass) const override {
    const double c = normal_upper_quantile(0.5 * tail_mass) * std::sqrt(th(0));
    return {Interval{th(0) - c, th(0) + c}};
  }
  ParamVec estimate(std::span<const ObsVec> data) const override {
    if (data.empty()) throw DomainError("estimate needs data");
    double m2 = 0.0;
    for (const auto& x : data) m2 += x(0) * x(0);
    m2 /= static_cast<double>(data.size());
    // Maximum likelihood: θ² + θ − mean(x²) = 0.
    return param_vec({std::max(0.5 * (-1.0 + std::sqrt(1.0 + 4.0 * m2)), 1e-8)});
  }
  ParamVec reference_theta() const override { return param_vec({1.0}); }
  std::string description() const override { return "normal model N(theta, theta): mean equals variance"; }
};

// ---------------------------------------------------------------------------
// Zero-mean bivariate normal in the orthogonal Cholesky parameterisation
// T⁻¹ = [[θ₁, 0], [θ₂θ₃, θ₂]], Σ = TT'.

class BvnCholeskyFamily final : public ParametricFamily {
 public:
  BvnCholeskyFamily()
      : ParametricFamily("bvn-cholesky", 3, 2,
                         {Interval{0.0, kInf}, Interval{0.0, kInf}, Interval{-kInf, kInf}},
                         {"theta1", "theta2", "theta3"}) {
    auto zero = [](const ParamVec&) { return ParamVec(ParamVec::Zero(3)); };
    add_prior(PriorField{"uniform", [](const ParamVec&) { return 0.0; }, zero});
    add_prior(PriorField{"jeffreys", [](const ParamVec& th) { return -2.0 * std::log(th(0)); },
                         [](const ParamVec& th) { return param_vec({-2.0 / th(0), 0.0, 0.0}); }});
    add_prior(PriorField{"right-haar",
                         [](const ParamVec& th) { return -std::log(th(0)) - std::log(th(1)); },
                         [](const ParamVec& th) { return param_vec({-1.0 / th(0), -1.0 / th(1), 0.0}); }});
    oracles_.fisher = [](const ParamVec& th) {
      ParamMat g = ParamMat::Zero(3, 3);
      g(0, 0) = 2.0 / (th(0) * th(0));
      g(1, 1) = 2.0 / (th(1) * th(1));
      g(2, 2) = th(1) * th(1) / (th(0) * th(0));
      return g;
    };
    oracles_.hpd_threshold = [](const ParamVec& th, double alpha) {
      return th(0) * th(1) * (1.0 - alpha) / (2.0 * kPi);
    };
    oracles_.xi = [](const ParamVec& th, double alpha) {
      const double r = -(1.0 - alpha) * std::log1p(-alpha);
      return param_vec({r / th(0), r / th(1), 0.0});
    };
  }

  double log_density(const ObsVec& x, const ParamVec& th) const override {
    const double z1 = th(0) * x(0);
    const double z2 = th(1) * (th(2) * x(0) + x(1));
    return std::log(th(0) * th(1)) - 2.0 * kLogSqrt2Pi - 0.5 * (z1 * z1 + z2 * z2);
  }
  ParamVec score(const ObsVec& x, const ParamVec& th) const override {
    const double w = th(2) * x(0) + x(1);
    return param_vec({1.0 / th(0) - th(0) * x(0) * x(0), 1.0 / th(1) - th(1) * w * w,
                      -th(1) * th(1) * w * x(0)});
  }
  ObsVec sample(const ParamVec& th, RngStream& rng) const override {
    const double z1 = rng.normal();
    const double z2 = rng.normal();
    const double x1 = z1 / th(0);
    return obs_vec({x1, z2 / th(1) - th(2) * x1});
  }
  ObsVec mode(const ParamVec&) const override { return obs_vec({0.0, 0.0}); }
  Box window(const ParamVec& th, double tail_mass) const override {
    const double c = std::sqrt(-2.0 * std::log(tail_mass));
    const double s1 = 1.0 / th(0);
    const double s2 = std::sqrt(th(2) * th(2) / (th(0) * th(0)) + 1.0 / (th(1) * th(1)));
    return {Interval{-c * s1, c * s1}, Interval{-c * s2, c * s2}};
  }
  ParamVec estimate(std::span<const ObsVec> data) const override {
    if (data.empty()) throw DomainError("estimate needs data");
    double s11 = 0.0, s12 = 0.0, s22 = 0.0;
    for (const auto& x : data) {
      s11 += x(0) * x(0);
      s12 += x(0) * x(1);
      s22 += x(1) * x(1);
    }
    const double n = static_cast<double>(data.size());
    s11 /= n;
    s12 /= n;
    s22 /= n;
    const double l11 = std::sqrt(std::max(s11, 1e-16));
    const double l21 = s12 / l11;
    const double l22 = std::sqrt(std::max(s22 - l21 * l21, 1e-16));
    return param_vec({1.0 / l11, 1.0 / l22, -l21 / l11});
  }
  ParamVec reference_theta() const override { return param_vec({1.0, 1.0, 0.0}); }
  std::string description() const override {
    return "zero-mean bivariate normal, orthogonal Cholesky parameterisation";
  }
};

// ---------------------------------------------------------------------------
// Spherical bivariate normal location model.

class SphericalLocation2dFamily final : public ParametricFamily {
 public:
  SphericalLocation2dFamily()
      : ParametricFamily("mvlocation-spherical-2d", 2, 2, {Interval{}, Interval{}},
                         {"theta1", "theta2"}) {
    auto zero = [](const ParamVec&) { return ParamVec(ParamVec::Zero(2)); };
    for (const char* n : {"uniform", "jeffreys", "right-haar"})
      add_prior(PriorField{n, [](const ParamVec&) { return 0.0; }, zero});
    oracles_.fisher = [](const ParamVec&) { return ParamMat(ParamMat::Identity(2, 2)); };
    oracles_.hpd_threshold = [](const ParamVec&, double alpha) { return (1.0 - alpha) / (2.0 * kPi); };
    oracles_.xi = [](const ParamVec&, double) { return ParamVec(ParamVec::Zero(2)); };
  }

  double log_density(const ObsVec& x, const ParamVec& th) const override {
    const double a = x(0) - th(0), b = x(1) - th(1);
    return -2.0 * kLogSqrt2Pi - 0.5 * (a * a + b * b);
  }
  ParamVec score(const ObsVec& x, const ParamVec& th) const override {
    return param_vec({x(0) - th(0), x(1) - th(1)});
  }
  ObsVec sample(const ParamVec& th, RngStream& rng) const override {
    const double a = rng.normal();
    const double b = rng.normal();
    return obs_vec({th(0) + a, th(1) + b});
  }
  ObsVec mode(const ParamVec& th) const override { return obs_vec({th(0), th(1)}); }
  Box window(const ParamVec& th, double tail_mass) const override {
    const double c = std::sqrt(-2.0 * std::log(tail_mass));
    return {Interval{th(0) - c, th(0) + c}, Interval{th(1) - c, th(1) + c}};
  }
  ParamVec estimate(std::span<const ObsVec> data) const override {
    if (data.empty()) throw DomainError("estimate needs data");
    ParamVec m = ParamVec::Zero(2);
    for (const auto& x : data) m += ParamVec(x);
    return m / static_cast<double>(data.size());
  }
  ParamVec reference_theta() const override { return param_vec({0.0, 0.0}); }
  std::string description() const override { return "bivariate standard normal location model"; }
};

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

}  // namespace

// ---------------------------------------------------------------------------

PriorField PriorField::from_log(std::string name, std::function<double(const ParamVec&)> log_prior,
                                double fd_rel_step) {
  PriorField f;
  f.name = std::move(name);
  f.log_prior = log_prior;
  f.log_prior_gradient = [lp = std::move(log_prior), fd_rel_step](const ParamVec& th) {
    ParamVec g(th.size());
    for (Eigen::Index i = 0; i < th.size(); ++i) {
      const double h = fd_step(th(i), fd_rel_step);
      ParamVec up = th, dn = th;
      up(i) += h;
      dn(i) -= h;
      g(i) = (lp(up) - lp(dn)) / (up(i) - dn(i));
    }
    return g;
  };
  return f;
}

ParametricFamily::ParametricFamily(std::string name, int param_dim, int obs_dim, Box domain,
                                   std::vector<std::string> param_names)
    : name_(std::move(name)),
      param_dim_(param_dim),
      obs_dim_(obs_dim),
      domain_(std::move(domain)),
      param_names_(std::move(param_names)) {
  if (param_dim_ < 1 || param_dim_ > kMaxParamDim) throw ConfigError("parameter dimension must be 1..3");
  if (obs_dim_ < 1 || obs_dim_ > kMaxObsDim) throw ConfigError("observation dimension must be 1 or 2");
}

bool ParametricFamily::in_domain(const ParamVec& theta) const {
  if (theta.size() != param_dim_) return false;
  for (int i = 0; i < param_dim_; ++i) {
    if (!std::isfinite(theta(i)) || !domain_[static_cast<std::size_t>(i)].contains_open(theta(i))) return false;
  }
  return true;
}

void ParametricFamily::require_domain(const ParamVec& theta) const {
  if (theta.size() != param_dim_)
    throw DomainError(name_ + ": expected " + std::to_string(param_dim_) + " parameters, got " +
                      std::to_string(theta.size()));
  if (!in_domain(theta)) throw DomainError(name_ + ": parameter outside the model domain");
}

ParamVec ParametricFamily::score_x_derivative(double x, const ParamVec& theta) const {
  if (obs_dim_ != 1) throw DomainError("score_x_derivative is defined for univariate observations only");
  const double h = 6.0554544523933395e-06 * (1.0 + std::abs(x));
  const double up = x + h, dn = x - h;
  return (score(obs_vec({up}), theta) - score(obs_vec({dn}), theta)) / (up - dn);
}

double ParametricFamily::cdf(double, const ParamVec&) const {
  throw DomainError(name_ + ": no distribution function available");
}

ParamVec ParametricFamily::cdf_theta_gradient(double x, const ParamVec& theta) const {
  ParamVec g(param_dim_);
  for (int i = 0; i < param_dim_; ++i) {
    const double h = fd_step(theta(i), 6.0554544523933395e-06);
    ParamVec up = theta, dn = theta;
    up(i) += h;
    dn(i) -= h;
    g(i) = (cdf(x, up) - cdf(x, dn)) / (up(i) - dn(i));
  }
  return g;
}

AxisBreaks ParametricFamily::window_breaks(const ParamVec& theta, double tail_mass) const {
  AxisBreaks breaks(static_cast<std::size_t>(obs_dim_));
  const ObsVec m = mode(theta);
  for (int i = 0; i < obs_dim_; ++i) breaks[static_cast<std::size_t>(i)].push_back(m(i));
  for (double t = 0.1;; t *= 0.1) {
    const double mass = std::max(t, tail_mass);
    const Box w = window(theta, mass);
    for (int i = 0; i < obs_dim_; ++i) {
      breaks[static_cast<std::size_t>(i)].push_back(w[static_cast<std::size_t>(i)].lo);
      breaks[static_cast<std::size_t>(i)].push_back(w[static_cast<std::size_t>(i)].hi);
    }
    if (mass <= tail_mass) break;
  }
  for (auto& b : breaks) {
    std::sort(b.begin(), b.end());
    b.erase(std::unique(b.begin(), b.end()), b.end());
  }
  return breaks;
}

const PriorField& ParametricFamily::prior(const std::string& name) const {
  auto it = priors_.find(name);
  if (it == priors_.end()) throw ConfigError(name_ + ": unknown prior '" + name + "'");
  return it->second;
}

void ParametricFamily::add_prior(PriorField prior) {
  std::string key = prior.name;
  priors_.insert_or_assign(std::move(key), std::move(prior));
}

BasePtr make_base_density(const std::string& raw) {
  const std::string name = lower(raw);
  if (name == "normal") return std::make_shared<NormalBase>();
  if (name == "logistic") return std::make_shared<LogisticBase>();
  if (!name.empty() && name[0] == 't') {
    std::string digits = name.substr(1);
    if (digits.size() >= 2 && digits.front() == '(' && digits.back() == ')')
      digits = digits.substr(1, digits.size() - 2);
    if (!digits.empty() && std::all_of(digits.begin(), digits.end(), [](unsigned char c) { return std::isdigit(c); })) {
      const int nu = std::stoi(digits);
      if (nu >= 1 && nu <= 30) return std::make_shared<StudentTBase>(nu);
    }
  }
  throw ConfigError("unknown base density '" + raw + "' (expected normal, logistic or t<nu>)");
}

FamilyPtr make_location_scale_family(const LocationScaleSpec& spec) {
  if (spec.scale_mode == ScaleMode::Fixed && !(spec.scale_value > 0.0))
    throw ConfigError("fixed scale must be positive");
  if (spec.name.empty()) throw ConfigError("family name must not be empty");
  return std::make_shared<LocationScaleFamily>(spec, make_base_density(spec.base));
}

std::vector<std::string> builtin_family_names() {
  return {"normal-location",          "location-scale-normal",    "location-scale-t(1)",
          "location-scale-t(2)",      "location-scale-t(5)",      "location-scale-logistic",
          "normal-mean-eq-var",       "bvn-cholesky",             "mvlocation-spherical-2d"};
}

FamilyPtr builtin_family(const std::string& name) {
  if (name == "normal-location") {
    LocationScaleSpec s{name, "normal", true, 0.0, ScaleMode::Fixed, 1.0};
    return make_location_scale_family(s);
  }
  if (name == "location-scale-normal") return make_location_scale_family({name, "normal"});
  if (name == "location-scale-logistic") return make_location_scale_family({name, "logistic"});
  const std::string t_prefix = "location-scale-t(";
  if (name.rfind(t_prefix, 0) == 0 && name.back() == ')') {
    const std::string nu = name.substr(t_prefix.size(), name.size() - t_prefix.size() - 1);
    if (nu == "1" || nu == "2" || nu == "5") return make_location_scale_family({name, "t" + nu});
  }
  if (name == "normal-mean-eq-var") return std::make_shared<NormalMeanEqVarFamily>();
  if (name == "bvn-cholesky") return std::make_shared<BvnCholeskyFamily>();
  if (name == "mvlocation-spherical-2d") return std::make_shared<SphericalLocation2dFamily>();
  throw ConfigError("unknown family '" + name + "'");
}

bool FamilyDiagnostic::all_passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const DiagnosticCheck& c) { return c.passed; });
}

}  // namespace pmp
