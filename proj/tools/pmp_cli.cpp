#include <cstdio>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "pmp/acceptance.hpp"
#include "pmp/config.hpp"
#include "pmp/runner.hpp"

namespace {

void print_box(const pmp::Box& box, const std::vector<std::string>& names) {
  for (std::size_t i = 0; i < box.size(); ++i) {
    std::printf("  %-8s (%g, %g)\n", names.empty() ? ("x" + std::to_string(i + 1)).c_str() : names[i].c_str(),
                box[i].lo, box[i].hi);
  }
}

int describe(const std::string& name) {
  const pmp::FamilyPtr fam = pmp::builtin_family(name);
  std::printf("%s\n", fam->name().c_str());
  if (!fam->description().empty()) std::printf("  %s\n", fam->description().c_str());
  std::printf("parameters (p=%d):\n", fam->param_dim());
  print_box(fam->param_domain(), fam->param_names());
  std::printf("observation dimension: %d\n", fam->obs_dim());
  std::printf("named priors:");
  for (const auto& [prior, _] : fam->named_priors()) std::printf(" %s", prior.c_str());
  std::printf("\nclosed-form oracles:%s%s%s%s\n", fam->oracles().fisher ? " fisher" : "",
              fam->oracles().quantile ? " quantile" : "", fam->oracles().hpd_threshold ? " hpd-threshold" : "",
              fam->oracles().xi ? " xi" : "");
  std::printf("cdf: %s, cdf theta-gradient: %s\n", fam->has_cdf() ? "yes" : "no",
              fam->has_cdf_theta_gradient() ? "closed form" : "finite differences");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Predictive probability matching priors: residuals, UPMP construction and coverage checks"};
  app.require_subcommand(1);

  pmp::RunOverrides ov;
  std::uint64_t seed = 0;
  int workers = 0;
  std::string out_dir, format;

  auto* run = app.add_subcommand("run", "Run an experiment config");
  std::string config_path;
  run->add_option("config", config_path, "Experiment config (JSON, comments allowed)")->required();
  run->add_option("--seed", seed, "Override the config seed");
  run->add_option("--workers", workers, "Worker threads (0: machine parallelism)")->check(CLI::NonNegativeNumber);
  run->add_option("--out-dir", out_dir, "Override the output directory");
  run->add_option("--format", format, "Report format")->check(CLI::IsMember({"csv", "json", "both"}));

  auto* verify = app.add_subcommand("verify", "Run the acceptance criteria and write a pass/fail manifest");
  pmp::VerifyOptions vo;
  std::vector<int> only;
  std::string manifest_path;
  bool no_rerun = false;
  verify->add_option("--seed", vo.seed, "Monte Carlo seed");
  verify->add_option("--workers", vo.workers, "Worker threads (0: machine parallelism)")->check(CLI::NonNegativeNumber);
  verify->add_option("--only", only, "Run only these criterion ids (1-11)")->check(CLI::Range(1, 11));
  verify->add_option("--tolerance-scale", vo.tolerance_scale,
                     "Scale every bound (below 1 tightens; tiny values are a negative control)")
      ->check(CLI::PositiveNumber);
  verify->add_option("--manifest", manifest_path, "Write the manifest here (default: <out-dir>/manifest.json)");
  verify->add_option("--out-dir", out_dir, "Directory for the manifest");
  verify->add_flag("--no-rerun", no_rerun, "Skip the determinism rerun of criterion 11");

  app.add_subcommand("list-families", "List built-in families");

  auto* desc = app.add_subcommand("describe", "Describe a built-in family");
  std::string family;
  desc->add_option("family", family, "Family name")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      pmp::ExperimentConfig cfg = pmp::load_config(config_path);
      if (run->count("--seed")) ov.seed = seed;
      if (run->count("--workers")) ov.workers = workers;
      if (run->count("--out-dir")) ov.out_dir = out_dir;
      if (run->count("--format")) ov.format = format;
      pmp::apply_overrides(cfg, ov);
      pmp::RunResult result = pmp::execute(cfg);
      pmp::write_reports(cfg, result);
      std::printf("%s %s  task=%s family=%s config_hash=%s\n", "pmp", pmp::kVersion, pmp::to_string(cfg.task).c_str(),
                  cfg.family.label().c_str(), result.config_hash.c_str());
      std::fputs(pmp::summary_text(result).c_str(), stdout);
      for (const std::string& f : result.written_files) std::printf("wrote %s\n", f.c_str());
      return result.all_assertions_passed() ? 0 : 1;
    }
    if (verify->parsed()) {
      vo.only = std::set<int>(only.begin(), only.end());
      vo.determinism_rerun = !no_rerun;
      const pmp::Manifest m = pmp::verify_all(vo, [](const pmp::CriterionResult& r) {
        std::printf("%s\n", pmp::criterion_line(r).c_str());
        std::fflush(stdout);
      });
      if (manifest_path.empty()) manifest_path = (out_dir.empty() ? std::string(".") : out_dir) + "/manifest.json";
      std::ofstream(manifest_path, std::ios::binary) << m.json(vo);
      std::printf("%s  manifest %s\n", m.all_passed() ? "ALL PASS" : "SOME CRITERIA FAILED", manifest_path.c_str());
      return m.all_passed() ? 0 : 1;
    }
    if (app.got_subcommand("list-families")) {
      for (const std::string& n : pmp::builtin_family_names()) std::printf("%s\n", n.c_str());
      return 0;
    }
    if (desc->parsed()) return describe(family);
  } catch (const pmp::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
  return 0;
}
