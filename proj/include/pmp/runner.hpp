#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pmp/config.hpp"
#include "pmp/report.hpp"

namespace pmp {

struct AssertionOutcome {
  Assertion assertion;
  double measured = 0.0;
  bool passed = false;
  std::string message;
};

struct RunResult {
  std::string config_hash;
  std::vector<Table> tables;
  std::vector<SummaryRow> summary;
  std::vector<AssertionOutcome> assertions;
  std::vector<std::string> written_files;

  [[nodiscard]] bool all_assertions_passed() const;
};

/// Command-line overrides applied on top of the config file.
struct RunOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<std::string> out_dir;
  std::optional<std::string> format;
};

void apply_overrides(ExperimentConfig& cfg, const RunOverrides& o);

/// Executes the configured task. Numeric failures at individual θ points
/// become summary rows with an "error: ..." verdict rather than exceptions;
/// configuration problems still throw ConfigError.
RunResult execute(const ExperimentConfig& cfg);

/// Writes every table (and the summary) under cfg.output.dir as
/// <stem>_<table>.csv / .json; records the paths in result.written_files.
void write_reports(const ExperimentConfig& cfg, RunResult& result);

/// Fixed-width text rendering of the summary and assertion outcomes.
std::string summary_text(const RunResult& result);

}  // namespace pmp
