#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "pmp/config.hpp"
#include "pmp/prior_expr.hpp"
#include "pmp/report.hpp"
#include "pmp/runner.hpp"

using namespace pmp;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::string error_of(const std::string& text) {
  try {
    (void)parse_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_SUITE("prior_expr") {

TEST_CASE("precedence and associativity") {
  const ParamVec t = param_vec({2.0, 3.0, 0.5});
  auto eval = [&](const char* s) { return PriorExpression::parse(s, 3)(t); };
  CHECK(eval("1 + 2 * 3") == 7.0);
  CHECK(eval("(1 + 2) * 3") == 9.0);
  CHECK(eval("2 ^ 3 ^ 2") == 512.0);
  CHECK(eval("-theta1 ^ 2") == -4.0);
  CHECK(eval("8 / 4 / 2") == 1.0);
  CHECK(eval("10 - 4 - 3") == 3.0);
  CHECK(eval("pow(theta2, 2) - theta1*theta3") == doctest::Approx(8.0));
  CHECK(eval("log(e) + exp(0) + sqrt(16) + abs(-1)") == doctest::Approx(7.0));
  CHECK(eval("2.5e-1 * 4") == doctest::Approx(1.0));
  CHECK(eval("pi") == doctest::Approx(3.141592653589793));
}

TEST_CASE("errors report the column") {
  auto message = [](const char* s, int dim) {
    try {
      (void)PriorExpression::parse(s, dim);
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  CHECK(message("theta1 +", 1).find("column 9") != std::string::npos);
  CHECK(message("log(theta1", 1).find("expected ')'") != std::string::npos);
  CHECK(message("theta2", 1).find("exceeds the parameter dimension") != std::string::npos);
  CHECK(message("sin(theta1)", 1).find("unknown identifier 'sin'") != std::string::npos);
  CHECK(message("1 $ 2", 1).find("column 3") != std::string::npos);
  CHECK(message("pow(1)", 1).find("expected ','") != std::string::npos);
}

TEST_CASE("expression priors get finite-difference gradients") {
  const PriorField p = expression_prior("mine", "-2*log(theta2) + 0.5*theta1^2", 2);
  const ParamVec g = p.log_prior_gradient(param_vec({1.5, 2.0}));
  CHECK(g(0) == doctest::Approx(1.5).epsilon(1e-9));
  CHECK(g(1) == doctest::Approx(-1.0).epsilon(1e-9));
  CHECK(p.name == "mine");
}

}

TEST_SUITE("config") {

TEST_CASE("every shipped example config parses and round-trips") {
  int seen = 0;
  for (const auto& entry : std::filesystem::directory_iterator(PMP_CONFIG_DIR)) {
    if (entry.path().extension() != ".json") continue;
    CAPTURE(entry.path().string());
    const ExperimentConfig c = parse_config(slurp(entry.path()));
    const std::string text = serialize_config(c);
    const ExperimentConfig again = parse_config(text);
    CHECK(again == c);
    CHECK(serialize_config(again) == text);
    CHECK(again.hash() == c.hash());
    ++seen;
  }
  CHECK(seen >= 5);
}

TEST_CASE("coverage with zero replicates is a validation error") {
  const std::string msg = error_of(R"({"task": "coverage", "family": "location-scale-normal",
      "priors": ["jeffreys"], "alphas": [0.5], "coverage": {"theta0": [0, 1], "n": 10, "replicates": 0}})");
  CHECK(msg.find("/coverage/replicates") != std::string::npos);
}

TEST_CASE("syntax errors carry line and column") {
  const std::string msg = error_of("{\n  \"task\": \"residual\",\n  \"family\" \"x\"\n}");
  CHECK(msg.find("line 3") != std::string::npos);
  CHECK(msg.find("column") != std::string::npos);
}

TEST_CASE("semantic errors name the offending field") {
  const std::string base = R"("family": "location-scale-normal", "priors": ["jeffreys"], "theta_grid": {"points": [[0, 1]]})";
  CHECK(error_of("{\"task\": \"residual\", " + base + ", \"colour\": 1}").find("/colour: unknown key") != std::string::npos);
  CHECK(error_of("{\"task\": \"fly\", " + base + "}").find("/task") != std::string::npos);
  CHECK(error_of(R"({"task": "residual", "family": "location-scale-normal", "priors": ["nope"], "theta_grid": {"points": [[0, 1]]}})")
            .find("/priors/0") != std::string::npos);
  CHECK(error_of(R"({"task": "residual", "family": "location-scale-normal", "priors": ["jeffreys"], "theta_grid": {"points": [[0, -1]]}})")
            .find("outside the parameter domain") != std::string::npos);
  CHECK(error_of(R"({"task": "residual", "family": "location-scale-normal", "priors": ["jeffreys"], "theta_grid": {"points": []}})")
            .find("grid is empty") != std::string::npos);
  CHECK(error_of("{\"task\": \"residual\", " + base + ", \"numerics\": {\"hpd_angles\": 3}}").find("hpd_angles") !=
        std::string::npos);
  CHECK(error_of("{\"task\": \"residual\", " + base + ", \"numerics\": {\"quad_tol\": 3}}").find("/numerics/quad_tol") !=
        std::string::npos);
  CHECK(error_of(R"({"task": "residual", "family": "bvn-cholesky", "priors": ["jeffreys"], "theta_grid": {"points": [[1, 1, 0]]}})")
            .find("univariate") != std::string::npos);
  CHECK(error_of("{\"task\": \"residual\", " + base + ", \"assertions\": [{\"row\": \"a\", \"metric\": \"b\", \"op\": \"=<\", \"value\": 1}]}")
            .find("/assertions/0/op") != std::string::npos);
}

TEST_CASE("tensor-product grids expand with the first axis slowest") {
  ThetaGrid g;
  g.axes = {{0.0, 1.0}, {5.0, 6.0, 7.0}};
  const auto pts = g.expand();
  REQUIRE(pts.size() == 6);
  CHECK(pts[0](0) == 0.0);
  CHECK(pts[0](1) == 5.0);
  CHECK(pts[1](1) == 6.0);
  CHECK(pts[3](0) == 1.0);
}

TEST_CASE("config hash ignores the worker count only") {
  ExperimentConfig c = parse_config(slurp(std::filesystem::path(PMP_CONFIG_DIR) / "residual_location_scale.json"));
  const std::string h = c.hash();
  c.numerics.workers = 5;
  CHECK(c.hash() == h);
  c.seed += 1;
  CHECK(c.hash() != h);
}

}

TEST_SUITE("report") {

TEST_CASE("floats print with 17 significant digits and a lowercase exponent") {
  CHECK(format_double(0.1) == "1.0000000000000001e-01");
  CHECK(format_double(-2.0) == "-2.0000000000000000e+00");
  CHECK(format_double(0.0) == "0.0000000000000000e+00");
  CHECK(format_double(std::nan("")) == "nan");
  CHECK(std::stod(format_double(1.0 / 3.0)) == 1.0 / 3.0);
}

TEST_CASE("csv and json tables embed hash and version") {
  Table t;
  t.name = "demo";
  t.columns = {"name", "value"};
  t.add_row({std::string("a,b"), 1.5});
  t.add_row({std::string("plain"), -0.25});
  CHECK_THROWS(t.add_row({1.0}));
  const ReportHeader h{"00000000deadbeef", kVersion};
  const std::string csv = table_csv(t, h);
  CHECK(csv.rfind("# pmp " + std::string(kVersion) + " config_hash=00000000deadbeef\n", 0) == 0);
  CHECK(csv.find("\"a,b\",1.5000000000000000e+00\n") != std::string::npos);
  const std::string json = table_json(t, h);
  CHECK(json.find("\"config_hash\": \"00000000deadbeef\"") != std::string::npos);
  CHECK(json.find("-2.5000000000000000e-01") != std::string::npos);
}

TEST_CASE("summary table has one column per metric") {
  const Table t = summary_table({SummaryRow{"a", {{"x", 1.0}}, "ok"}, SummaryRow{"b", {{"y", 2.0}}, "ok"}});
  CHECK(t.columns == std::vector<std::string>{"row", "x", "y", "verdict"});
  CHECK(t.rows.size() == 2);
}

}

TEST_SUITE("runner") {

TEST_CASE("residual task gives the two-row right-Haar / Jeffreys summary") {
  ExperimentConfig c = parse_config(slurp(std::filesystem::path(PMP_CONFIG_DIR) / "residual_location_scale.json"));
  const RunResult r = execute(c);
  REQUIRE(r.summary.size() == 2);
  CHECK(r.summary[0].row == "right-haar");
  CHECK(r.summary[0].metrics.at("sup_abs_epsilon") <= 1e-5);
  CHECK(r.summary[1].metrics.at("sup_abs_epsilon") >= 1e-2);
  CHECK(r.all_assertions_passed());
  REQUIRE(r.tables.size() == 1);
  CHECK(r.tables[0].rows.size() == 2u * 9u * 19u);
}

TEST_CASE("failing assertions are reported, not thrown") {
  ExperimentConfig c = parse_config(slurp(std::filesystem::path(PMP_CONFIG_DIR) / "residual_location_scale.json"));
  c.assertions.push_back(Assertion{"jeffreys", "sup_abs_epsilon", "<=", 1e-5});
  c.assertions.push_back(Assertion{"missing-row", "sup_abs_epsilon", "<=", 1.0});
  const RunResult r = execute(c);
  CHECK_FALSE(r.all_assertions_passed());
  CHECK(r.assertions[2].passed == false);
  CHECK(r.assertions[3].message.find("no summary row") != std::string::npos);
}

TEST_CASE("numeric failures at a grid point become error rows") {
  ExperimentConfig c;
  c.task = Task::Residual;
  c.family.builtin = "location-scale-normal";
  c.priors = {PriorSpec{"jeffreys", ""}};
  // Too close to σ = 0 for the difference stencil.
  c.theta_grid.points = {{0.0, 1.0}, {0.0, 1e-7}};
  c.alphas = {0.5};
  const RunResult r = execute(c);
  bool has_error_row = false;
  for (const SummaryRow& s : r.summary) has_error_row = has_error_row || s.verdict.rfind("error:", 0) == 0;
  CHECK(has_error_row);
}

TEST_CASE("verify task and report files") {
  ExperimentConfig c = parse_config(slurp(std::filesystem::path(PMP_CONFIG_DIR) / "verify_user_family.json"));
  const auto dir = std::filesystem::temp_directory_path() / "pmp_runner_test";
  std::filesystem::remove_all(dir);
  c.output.dir = dir.string();
  RunResult r = execute(c);
  CHECK(r.all_assertions_passed());
  write_reports(c, r);
  CHECK(std::filesystem::exists(dir / "verify_verify.csv"));
  CHECK(std::filesystem::exists(dir / "verify_summary.json"));
  const std::string csv = slurp(dir / "verify_verify.csv");
  CHECK(csv.find("config_hash=" + c.hash()) != std::string::npos);
  // The copy of the config written next to the reports parses back to the same config.
  CHECK(parse_config(slurp(dir / "verify_config.json")) == c);
}

TEST_CASE("diagnose and hpd-upmp tasks") {
  ExperimentConfig c = parse_config(slurp(std::filesystem::path(PMP_CONFIG_DIR) / "diagnose_bvn.json"));
  RunResult r = execute(c);
  CHECK(r.all_assertions_passed());
  bool sep = false;
  for (const SummaryRow& s : r.summary) sep = sep || (s.row == "separability" && s.verdict == "eq41");
  CHECK(sep);

  c.task = Task::HpdUpmp;
  c.assertions = {Assertion{"hpd-upmp", "dependent_points", "==", 3}};
  r = execute(c);
  CHECK(r.all_assertions_passed());
}

}
