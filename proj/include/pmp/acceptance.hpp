#pragma once

#include <cstdint>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include "pmp/numerics.hpp"

namespace pmp {

/// One measured quantity against one pinned bound.
struct SubCheck {
  std::string name;
  double measured = 0.0;
  std::string op;  // "<=" or ">="
  double bound = 0.0;
  bool passed = false;
  std::string note;
};

struct CriterionResult {
  int id = 0;
  std::string title;
  std::vector<SubCheck> checks;
  std::string error;  // set when a computation threw; the criterion then fails
  bool passed = false;
  double seconds = 0.0;  // wall time, kept out of the manifest
};

struct VerifyOptions {
  /// Multiplies every upper bound and divides every lower bound. Values
  /// below 1 tighten the suite; a tiny value is the negative control.
  double tolerance_scale = 1.0;
  std::set<int> only;  // empty: every criterion
  std::uint64_t seed = 20061;
  int workers = 0;
  /// Criterion 11 reruns the selected criteria and compares manifest bytes.
  bool determinism_rerun = true;
  NumericsConfig numerics;
};

struct Manifest {
  std::vector<CriterionResult> criteria;
  [[nodiscard]] bool all_passed() const;
  /// Deterministic JSON text: no timings, numbers in %.16e.
  [[nodiscard]] std::string json(const VerifyOptions& opts) const;
};

using CriterionCallback = std::function<void(const CriterionResult&)>;

/// Runs the acceptance criteria. Never throws for numeric problems; they
/// are recorded as failed criteria.
Manifest verify_all(const VerifyOptions& opts, const CriterionCallback& on_done = {});

/// "PASS  1  title  (worst check ...)" style line.
std::string criterion_line(const CriterionResult& r);

}  // namespace pmp
