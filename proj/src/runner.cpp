#include "pmp/runner.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "pmp/coverage.hpp"
#include "pmp/hpd_match.hpp"
#include "pmp/quantile_match.hpp"

namespace pmp {

namespace {

std::vector<std::string> theta_columns(int p) {
  std::vector<std::string> c;
  for (int i = 1; i <= p; ++i) c.push_back("theta" + std::to_string(i));
  return c;
}

std::vector<std::string> vector_columns(const std::string& prefix, int p) {
  std::vector<std::string> c;
  for (int i = 1; i <= p; ++i) c.push_back(prefix + std::to_string(i));
  return c;
}

void append(std::vector<Cell>& row, const ParamVec& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) row.emplace_back(v(i));
}

std::string theta_label(const ParamVec& t) {
  std::string s = "(";
  char buf[32];
  for (Eigen::Index i = 0; i < t.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%s%.6g", i ? "," : "", t(i));
    s += buf;
  }
  return s + ")";
}

// Runs fn; numeric problems at one θ become an error row instead of
// aborting the whole task.
template <class F>
bool guarded(std::vector<SummaryRow>& summary, const std::string& where, F&& fn) {
  try {
    fn();
    return true;
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    summary.push_back(SummaryRow{"error@" + where, {}, std::string("error: ") + e.what()});
    return false;
  }
}

struct Context {
  const ExperimentConfig& cfg;
  FamilyPtr fam;
  std::vector<ParamVec> grid;
  std::vector<double> alphas;
  std::vector<PriorField> priors;
  RunResult& out;
};

void run_residual(Context& c, MatchKind kind) {
  const int p = c.fam->param_dim();
  const NumericsConfig& nc = c.cfg.numerics;
  std::vector<FluxSlice> fluxes(c.grid.size());
  std::vector<bool> ok(c.grid.size(), false);
  std::vector<double> min_eig(c.grid.size(), std::nan(""));
  std::vector<std::vector<double>> m(c.grid.size());
  parallel_for(c.grid.size(), nc.workers, [&](std::size_t i) {
    try {
      if (kind == MatchKind::Quantile) {
        fluxes[i] = quantile_flux(*c.fam, c.grid[i], c.alphas, nc);
      } else {
        fluxes[i] = hpd_flux(*c.fam, c.grid[i], c.alphas, nc);
        const RayTable table = hpd_table(*c.fam, c.grid[i], nc);
        for (double a : c.alphas) m[i].push_back(hpd_slice(*c.fam, table, c.grid[i], a, nc).m);
        min_eig[i] = b_matrix(*c.fam, c.grid[i], nc).min_eigenvalue;
      }
      ok[i] = true;
    } catch (const ConfigError&) {
      throw;
    } catch (const Error&) {
    }
  });
  // Recompute failures serially so the error text lands in the summary.
  for (std::size_t i = 0; i < c.grid.size(); ++i) {
    if (ok[i]) continue;
    guarded(c.out.summary, theta_label(c.grid[i]), [&] {
      (void)(kind == MatchKind::Quantile ? quantile_flux(*c.fam, c.grid[i], c.alphas, nc)
                                         : hpd_flux(*c.fam, c.grid[i], c.alphas, nc));
    });
  }
  std::vector<FluxSlice> good;
  for (std::size_t i = 0; i < c.grid.size(); ++i)
    if (ok[i]) good.push_back(fluxes[i]);

  std::string form;
  if (kind == MatchKind::Hpd) {
    guarded(c.out.summary, "separability", [&] {
      std::vector<ParamVec> pts;
      for (const FluxSlice& f : good) pts.push_back(f.theta);
      if (!pts.empty()) form = to_string(separability_diagnosis(*c.fam, pts, nc).form);
    });
  }

  Table t;
  t.name = kind == MatchKind::Quantile ? "residual" : "hpd_residual";
  t.columns = {"prior"};
  for (auto& s : theta_columns(p)) t.columns.push_back(s);
  for (const char* s : {"alpha", "epsilon", "err_est"}) t.columns.push_back(s);
  if (kind == MatchKind::Hpd)
    for (const char* s : {"m", "min_eig_b", "form"}) t.columns.push_back(s);

  for (const PriorField& prior : c.priors) {
    SummaryRow row{prior.name, {}, ""};
    bool failed = false;
    double sup = 0.0, err = 0.0;
    for (std::size_t i = 0; i < c.grid.size(); ++i) {
      if (!ok[i]) continue;
      failed = !guarded(c.out.summary, prior.name + "@" + theta_label(c.grid[i]), [&] {
        const ResidualReport rep = residual_report(*c.fam, prior, kind, {fluxes[i]});
        for (std::size_t k = 0; k < rep.cells.size(); ++k) {
          const ResidualCell& cell = rep.cells[k];
          std::vector<Cell> r{prior.name};
          append(r, cell.theta);
          r.emplace_back(cell.alpha);
          r.emplace_back(cell.epsilon);
          r.emplace_back(cell.err_est);
          if (kind == MatchKind::Hpd) {
            r.emplace_back(m[i][k]);
            r.emplace_back(min_eig[i]);
            r.emplace_back(form);
          }
          t.add_row(std::move(r));
        }
        sup = std::max(sup, rep.sup_norm());
        err = std::max(err, rep.max_err_est());
      }) || failed;
    }
    row.metrics["sup_abs_epsilon"] = sup;
    row.metrics["max_err_est"] = err;
    row.verdict = failed || good.size() != c.grid.size() ? "partial" : "ok";
    c.out.summary.push_back(std::move(row));
  }
  c.out.tables.push_back(std::move(t));
}

void prior_gap_rows(Context& c, const std::vector<ParamVec>& pts, const std::vector<ParamVec>& grads) {
  for (const PriorField& prior : c.priors) {
    double gap = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i)
      gap = std::max(gap, (prior.log_prior_gradient(pts[i]) - grads[i]).cwiseAbs().maxCoeff());
    c.out.summary.push_back(SummaryRow{prior.name, {{"max_gradient_gap", gap}}, pts.empty() ? "no points" : "ok"});
  }
}

void run_upmp(Context& c) {
  const int p = c.fam->param_dim();
  const NumericsConfig& nc = c.cfg.numerics;
  Table t;
  t.name = "upmp";
  t.columns = theta_columns(p);
  for (auto& s : vector_columns("grad", p)) t.columns.push_back(s);
  for (auto& s : vector_columns("jeffreys", p)) t.columns.push_back(s);
  for (auto& s : vector_columns("h", p)) t.columns.push_back(s);
  std::vector<ParamVec> pts, grads;
  for (const ParamVec& th : c.grid) {
    guarded(c.out.summary, theta_label(th), [&] {
      const ParamVec j = jeffreys_gradient(*c.fam, th, nc);
      const ParamVec h = h_field(*c.fam, th, nc);
      std::vector<Cell> r;
      append(r, th);
      append(r, ParamVec(j + h));
      append(r, j);
      append(r, h);
      t.add_row(std::move(r));
      pts.push_back(th);
      grads.push_back(j + h);
    });
  }
  c.out.tables.push_back(std::move(t));

  SummaryRow row{"upmp", {}, ""};
  guarded(c.out.summary, "curl", [&] {
    const VectorField field = [&](const ParamVec& th) { return upmp_gradient(*c.fam, th, nc); };
    const GradientTest gt = gradient_field_test(field, pts, nc);
    row.metrics["max_curl"] = gt.max_curl;
    row.metrics["is_gradient"] = gt.is_gradient ? 1.0 : 0.0;
    if (pts.size() >= 2) {
      const PathIntegral pi = integrate_field(field, pts.front(), pts.back(), nc);
      row.metrics["path_gap"] = pi.path_gap;
      row.metrics["log_prior_change"] = pi.value;
    }
    row.verdict = gt.is_gradient ? "gradient field" : "not a gradient field";
  });
  c.out.summary.push_back(std::move(row));
  prior_gap_rows(c, pts, grads);
}

void run_hpd_upmp(Context& c) {
  const int p = c.fam->param_dim();
  const NumericsConfig& nc = c.cfg.numerics;
  Table t;
  t.name = "hpd_upmp";
  t.columns = theta_columns(p);
  t.columns.push_back("ratio");
  for (auto& s : vector_columns("grad", p)) t.columns.push_back(s);
  t.columns.push_back("status");
  std::vector<ParamVec> pts, grads;
  double lo = kInf, hi = 0.0;
  int dependent = 0;
  for (const ParamVec& th : c.grid) {
    guarded(c.out.summary, theta_label(th), [&] {
      std::vector<Cell> r;
      append(r, th);
      try {
        const ParamVec g = hpd_upmp_gradient(*c.fam, th, nc);
        const double ratio = b_matrix(*c.fam, th, nc).ratio;
        lo = std::min(lo, ratio);
        hi = std::max(hi, ratio);
        r.emplace_back(ratio);
        append(r, g);
        r.emplace_back(std::string("independent"));
        pts.push_back(th);
        grads.push_back(g);
      } catch (const LinearlyDependentXi& e) {
        ++dependent;
        lo = std::min(lo, e.ratio());
        hi = std::max(hi, e.ratio());
        r.emplace_back(e.ratio());
        for (int i = 0; i < p; ++i) r.emplace_back(std::nan(""));
        r.emplace_back(std::string("linearly-dependent"));
      }
      t.add_row(std::move(r));
    });
  }
  c.out.tables.push_back(std::move(t));
  c.out.summary.push_back(SummaryRow{"hpd-upmp",
                                     {{"min_ratio", lo}, {"max_ratio", hi}, {"dependent_points", static_cast<double>(dependent)}},
                                     dependent > 0 ? "b singular somewhere" : "b nonsingular"});
  prior_gap_rows(c, pts, grads);
}

void run_fields(Context& c) {
  const int p = c.fam->param_dim();
  const NumericsConfig& nc = c.cfg.numerics;
  Table t;
  t.name = "fields";
  t.columns = theta_columns(p);
  for (auto& s : vector_columns("h", p)) t.columns.push_back(s);
  t.columns.push_back("h_norm");
  std::vector<ParamVec> pts;
  double max_h = 0.0;
  for (const ParamVec& th : c.grid) {
    guarded(c.out.summary, theta_label(th), [&] {
      const ParamVec h = h_field(*c.fam, th, nc);
      std::vector<Cell> r;
      append(r, th);
      append(r, h);
      r.emplace_back(h.norm());
      t.add_row(std::move(r));
      max_h = std::max(max_h, h.norm());
      pts.push_back(th);
    });
  }
  c.out.tables.push_back(std::move(t));
  SummaryRow row{"h", {{"max_h_norm", max_h}}, ""};
  guarded(c.out.summary, "curl", [&] {
    const GradientTest gh =
        gradient_field_test([&](const ParamVec& th) { return h_field(*c.fam, th, nc); }, pts, nc);
    const GradientTest gu =
        gradient_field_test([&](const ParamVec& th) { return upmp_gradient(*c.fam, th, nc); }, pts, nc);
    row.metrics["h_max_curl"] = gh.max_curl;
    row.metrics["upmp_max_curl"] = gu.max_curl;
    row.metrics["upmp_is_gradient"] = gu.is_gradient ? 1.0 : 0.0;
    row.verdict = gu.is_gradient ? "upmp is a gradient field" : "upmp is not a gradient field";
  });
  c.out.summary.push_back(std::move(row));
}

void run_diagnose(Context& c) {
  const int p = c.fam->param_dim();
  const NumericsConfig& nc = c.cfg.numerics;
  Table t;
  t.name = "b_matrix";
  t.columns = theta_columns(p);
  for (auto& s : vector_columns("eig", p)) t.columns.push_back(s);
  for (const char* s : {"trace", "ratio", "independent"}) t.columns.push_back(s);
  double lo = kInf, hi = 0.0;
  std::vector<ParamVec> pts;
  for (const ParamVec& th : c.grid) {
    guarded(c.out.summary, theta_label(th), [&] {
      const BMatrix b = b_matrix(*c.fam, th, nc);
      std::vector<Cell> r;
      append(r, th);
      append(r, b.eigenvalues);
      r.emplace_back(b.trace);
      r.emplace_back(b.ratio);
      r.emplace_back(std::string(b.independent() ? "yes" : "no"));
      t.add_row(std::move(r));
      lo = std::min(lo, b.ratio);
      hi = std::max(hi, b.ratio);
      pts.push_back(th);
    });
  }
  c.out.tables.push_back(std::move(t));
  c.out.summary.push_back(SummaryRow{"b",
                                     {{"min_ratio", lo}, {"max_ratio", hi}, {"independence_tol", nc.independence_tol}},
                                     lo > nc.independence_tol ? "independent" : "dependent somewhere"});
  guarded(c.out.summary, "separability", [&] {
    if (pts.empty()) return;
    const SeparabilityReport s = separability_diagnosis(*c.fam, pts, nc);
    SummaryRow row{"separability",
                   {{"evidence", s.evidence}, {"common_profile", s.common_profile}, {"per_theta", s.per_theta}},
                   to_string(s.form)};
    for (std::size_t i = 0; i < s.per_row.size(); ++i) row.metrics["row" + std::to_string(i + 1)] = s.per_row[i];
    c.out.summary.push_back(std::move(row));
  });
}

void run_coverage_task(Context& c) {
  const CoverageSpec& cs = *c.cfg.coverage;
  const ParamVec theta0 = to_param(cs.theta0);
  const bool hpd = cs.kind == "hpd";
  Table t;
  t.name = "coverage";
  t.columns = {"prior", "kind", "alpha", "n", "replicates", "coverage_hat", "se", "binary_hat", "binary_se",
               "defect_hat", "predicted_defect", "z_score", "retries", "failures", "failed", "seed", "run_hash"};
  for (const PriorField& prior : c.priors) {
    for (double a : c.alphas) {
      char label[64];
      std::snprintf(label, sizeof label, "@%.6g", a);
      guarded(c.out.summary, prior.name + label, [&] {
        const CoverageReport r = hpd ? coverage_mc_hpd(*c.fam, prior, theta0, cs.n, a, cs.replicates, c.cfg.seed,
                                                       c.cfg.numerics)
                                     : coverage_mc(*c.fam, prior, theta0, cs.n, a, cs.replicates, c.cfg.seed,
                                                   c.cfg.numerics);
        t.add_row({prior.name, to_string(r.kind), r.alpha, static_cast<double>(r.n),
                   static_cast<double>(r.replicates), r.coverage_hat, r.se, r.binary_hat, r.binary_se,
                   r.defect_hat, r.predicted_defect, r.z_score, static_cast<double>(r.retries),
                   static_cast<double>(r.failures), std::string(r.failed ? "yes" : "no"), std::to_string(r.seed),
                   r.config_hash});
        c.out.summary.push_back(SummaryRow{prior.name + label,
                                           {{"coverage_hat", r.coverage_hat},
                                            {"se", r.se},
                                            {"defect_hat", r.defect_hat},
                                            {"predicted_defect", r.predicted_defect},
                                            {"z_score", r.z_score},
                                            {"abs_z", std::abs(r.z_score)},
                                            {"coverage_gap_se", std::abs(r.coverage_hat - a) / r.se}},
                                           r.failed ? "failed: grid retries exceeded" : "ok"});
      });
    }
  }
  c.out.tables.push_back(std::move(t));
}

void run_verify(Context& c) {
  const int p = c.fam->param_dim();
  Table t;
  t.name = "verify";
  t.columns = theta_columns(p);
  for (const char* s : {"check", "error", "tolerance", "passed", "note"}) t.columns.push_back(s);
  int failed = 0, total = 0;
  for (const ParamVec& th : c.grid) {
    guarded(c.out.summary, theta_label(th), [&] {
      const FamilyDiagnostic d = validate_family(*c.fam, th, c.cfg.numerics, c.cfg.seed);
      for (const DiagnosticCheck& chk : d.checks) {
        std::vector<Cell> r;
        append(r, th);
        r.emplace_back(chk.name);
        r.emplace_back(chk.error);
        r.emplace_back(chk.tolerance);
        r.emplace_back(std::string(chk.passed ? "yes" : "no"));
        r.emplace_back(chk.note);
        t.add_row(std::move(r));
        ++total;
        failed += chk.passed ? 0 : 1;
      }
    });
  }
  c.out.tables.push_back(std::move(t));
  c.out.summary.push_back(SummaryRow{c.fam->name(),
                                     {{"checks", static_cast<double>(total)}, {"failed_checks", static_cast<double>(failed)}},
                                     failed == 0 ? "all invariants hold" : "invariant failures"});
}

}  // namespace

bool RunResult::all_assertions_passed() const {
  for (const AssertionOutcome& a : assertions)
    if (!a.passed) return false;
  return true;
}

void apply_overrides(ExperimentConfig& cfg, const RunOverrides& o) {
  if (o.seed) cfg.seed = *o.seed;
  if (o.workers) cfg.numerics.workers = *o.workers;
  if (o.out_dir) cfg.output.dir = *o.out_dir;
  if (o.format) cfg.output.format = *o.format;
  cfg.validate();
}

RunResult execute(const ExperimentConfig& cfg) {
  cfg.validate();
  RunResult out;
  out.config_hash = cfg.hash();
  Context c{cfg, cfg.family.build(), cfg.theta_grid.expand(), cfg.alpha_list(), {}, out};
  for (const PriorSpec& s : cfg.priors) c.priors.push_back(resolve_prior(*c.fam, s, cfg.numerics));

  switch (cfg.task) {
    case Task::Residual: run_residual(c, MatchKind::Quantile); break;
    case Task::HpdResidual: run_residual(c, MatchKind::Hpd); break;
    case Task::Upmp: run_upmp(c); break;
    case Task::HpdUpmp: run_hpd_upmp(c); break;
    case Task::Fields: run_fields(c); break;
    case Task::Diagnose: run_diagnose(c); break;
    case Task::Coverage: run_coverage_task(c); break;
    case Task::Verify: run_verify(c); break;
  }

  for (const Assertion& a : cfg.assertions) {
    AssertionOutcome o{a, std::nan(""), false, ""};
    const SummaryRow* row = nullptr;
    for (const SummaryRow& r : out.summary)
      if (r.row == a.row) row = &r;
    if (!row) {
      o.message = "no summary row named '" + a.row + "'";
    } else if (const auto it = row->metrics.find(a.metric); it == row->metrics.end()) {
      o.message = "row '" + a.row + "' has no metric '" + a.metric + "'";
    } else {
      o.measured = it->second;
      o.passed = a.holds(o.measured);
      o.message = o.passed ? "pass" : "FAIL";
    }
    out.assertions.push_back(std::move(o));
  }
  return out;
}

void write_reports(const ExperimentConfig& cfg, RunResult& result) {
  namespace fs = std::filesystem;
  const fs::path dir(cfg.output.dir);
  fs::create_directories(dir);
  const std::string stem = cfg.output.stem.empty() ? to_string(cfg.task) : cfg.output.stem;
  const ReportHeader header{result.config_hash, kVersion};
  std::vector<Table> tables = result.tables;
  tables.push_back(summary_table(result.summary));
  auto write = [&](const fs::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot write " + path.string());
    f << text;
    result.written_files.push_back(path.string());
  };
  for (const Table& t : tables) {
    const std::string base = stem + "_" + t.name;
    if (cfg.output.format != "json") write(dir / (base + ".csv"), table_csv(t, header));
    if (cfg.output.format != "csv") write(dir / (base + ".json"), table_json(t, header));
  }
  write(dir / (stem + "_config.json"), serialize_config(cfg));
}

std::string summary_text(const RunResult& result) {
  std::string s;
  char buf[512];
  for (const SummaryRow& r : result.summary) {
    std::snprintf(buf, sizeof buf, "%-28s", r.row.c_str());
    s += buf;
    for (const auto& [k, v] : r.metrics) {
      std::snprintf(buf, sizeof buf, " %s=%.4g", k.c_str(), v);
      s += buf;
    }
    s += "  [" + r.verdict + "]\n";
  }
  for (const AssertionOutcome& a : result.assertions) {
    std::snprintf(buf, sizeof buf, "assert %s.%s %s %.6g: measured %.6g  %s\n", a.assertion.row.c_str(),
                  a.assertion.metric.c_str(), a.assertion.op.c_str(), a.assertion.value, a.measured,
                  a.message.c_str());
    s += buf;
  }
  return s;
}

}  // namespace pmp
