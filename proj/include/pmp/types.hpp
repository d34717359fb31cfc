#pragma once

#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace pmp {

// Parameter dimension never exceeds 3 and observation dimension never
// exceeds 2, so these stay on the stack.
using ParamVec = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, 3, 1>;
using ParamMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, 3, 3>;
using ObsVec = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, 2, 1>;

constexpr int kMaxParamDim = 3;
constexpr int kMaxObsDim = 2;
constexpr double kInf = std::numeric_limits<double>::infinity();

/// Open interval (lo, hi); either end may be infinite.
struct Interval {
  double lo = -kInf;
  double hi = kInf;

  [[nodiscard]] bool contains_open(double x) const { return x > lo && x < hi; }
  [[nodiscard]] double width() const { return hi - lo; }
  bool operator==(const Interval&) const = default;
};

using Box = std::vector<Interval>;

inline ParamVec param_vec(std::initializer_list<double> values) {
  ParamVec v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v(i++) = x;
  return v;
}

inline ObsVec obs_vec(std::initializer_list<double> values) {
  ObsVec v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v(i++) = x;
  return v;
}

inline ParamVec to_param(const std::vector<double>& values) {
  ParamVec v(static_cast<Eigen::Index>(values.size()));
  for (std::size_t i = 0; i < values.size(); ++i) v(static_cast<Eigen::Index>(i)) = values[i];
  return v;
}

inline std::vector<double> to_std(const ParamVec& v) {
  return {v.data(), v.data() + v.size()};
}

// Error hierarchy. Everything derives from Error so callers can catch the
// whole family at report boundaries.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class NumericFailure : public Error {
 public:
  using Error::Error;
};

/// The Fisher information came out singular or indefinite.
class NonRegularModel : public Error {
 public:
  using Error::Error;
};

class NotAGradientField : public Error {
 public:
  using Error::Error;
};

/// b(θ) is singular: either no UPMP exists or infinitely many do.
class LinearlyDependentXi : public Error {
 public:
  LinearlyDependentXi(const std::string& what, double ratio)
      : Error(what), ratio_(ratio) {}
  [[nodiscard]] double ratio() const { return ratio_; }

 private:
  double ratio_;
};

class GridMisplaced : public Error {
 public:
  using Error::Error;
};

}  // namespace pmp
