#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pmp/family.hpp"
#include "pmp/numerics.hpp"

namespace pmp {

inline constexpr const char* kVersion = "0.1.0";

enum class Task { Residual, HpdResidual, Upmp, HpdUpmp, Fields, Diagnose, Coverage, Verify };

std::string to_string(Task task);
/// Throws ConfigError for an unknown task name.
Task task_from_string(const std::string& name);

/// Either a built-in family name or a location/scale declaration over a
/// built-in base density.
struct FamilySpec {
  std::string builtin;
  std::optional<LocationScaleSpec> user;

  [[nodiscard]] FamilyPtr build() const;
  [[nodiscard]] std::string label() const { return user ? user->name : builtin; }
  bool operator==(const FamilySpec&) const = default;
};

/// A named prior of the family, or a log-prior expression when expression
/// is non-empty.
struct PriorSpec {
  std::string name;
  std::string expression;
  bool operator==(const PriorSpec&) const = default;
};

/// Explicit points, or the tensor product of per-coordinate axes. Exactly
/// one of the two is non-empty.
struct ThetaGrid {
  std::vector<std::vector<double>> points;
  std::vector<std::vector<double>> axes;

  [[nodiscard]] std::vector<ParamVec> expand() const;
  bool operator==(const ThetaGrid&) const = default;
};

struct CoverageSpec {
  std::vector<double> theta0;
  int n = 10;
  int replicates = 0;
  std::string kind = "quantile";  // or "hpd"
  bool operator==(const CoverageSpec&) const = default;
};

struct Assertion {
  std::string row;
  std::string metric;
  std::string op;  // one of <= < >= > ==
  double value = 0.0;

  [[nodiscard]] bool holds(double measured) const;
  bool operator==(const Assertion&) const = default;
};

struct OutputSpec {
  std::string dir = "out";
  std::string stem;  // defaults to the task name
  std::string format = "both";  // csv, json or both
  bool operator==(const OutputSpec&) const = default;
};

struct ExperimentConfig {
  Task task = Task::Residual;
  FamilySpec family;
  std::vector<PriorSpec> priors;
  ThetaGrid theta_grid;
  std::vector<double> alphas;  // empty: {0.05, ..., 0.95}
  std::optional<CoverageSpec> coverage;
  NumericsConfig numerics;
  std::uint64_t seed = 20061;
  OutputSpec output;
  std::vector<Assertion> assertions;

  /// Task-specific consistency checks; throws ConfigError naming the field.
  void validate() const;
  [[nodiscard]] std::vector<double> alpha_list() const;
  /// FNV-1a of the canonical JSON text (sorted keys, workers excluded).
  [[nodiscard]] std::string hash() const;
  bool operator==(const ExperimentConfig&) const = default;
};

/// Parses JSON text (comments allowed). Syntax errors report line and
/// column; semantic errors report the JSON path of the offending value.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);
/// Canonical JSON text; parse_config(serialize_config(c)) == c.
std::string serialize_config(const ExperimentConfig& cfg);

/// Resolves a prior spec against a family.
PriorField resolve_prior(const ParametricFamily& fam, const PriorSpec& spec, const NumericsConfig& cfg);

}  // namespace pmp
