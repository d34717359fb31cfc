#include "pmp/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "pmp/prior_expr.hpp"
#include "pmp/quantile_match.hpp"

namespace pmp {

using nlohmann::json;

namespace {

constexpr std::pair<Task, const char*> kTaskNames[] = {
    {Task::Residual, "residual"}, {Task::HpdResidual, "hpd-residual"}, {Task::Upmp, "upmp"},
    {Task::HpdUpmp, "hpd-upmp"},  {Task::Fields, "fields"},            {Task::Diagnose, "diagnose"},
    {Task::Coverage, "coverage"}, {Task::Verify, "verify"},
};

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ConfigError("config " + (path.empty() ? std::string("/") : path) + ": " + what);
}

void only_keys(const json& j, const std::string& path, std::initializer_list<const char*> allowed) {
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, _] : j.items()) {
    if (!ok.contains(key)) fail(path + "/" + key, "unknown key");
  }
}

const json& object_at(const json& j, const std::string& path) {
  if (!j.is_object()) fail(path, "expected an object");
  return j;
}

double number_at(const json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "expected a number");
  return j.get<double>();
}

int int_at(const json& j, const std::string& path) {
  if (!j.is_number_integer()) fail(path, "expected an integer");
  return j.get<int>();
}

std::string string_at(const json& j, const std::string& path) {
  if (!j.is_string()) fail(path, "expected a string");
  return j.get<std::string>();
}

std::vector<double> numbers_at(const json& j, const std::string& path) {
  if (!j.is_array()) fail(path, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(number_at(j[i], path + "/" + std::to_string(i)));
  return out;
}

std::vector<std::vector<double>> rows_at(const json& j, const std::string& path) {
  if (!j.is_array()) fail(path, "expected an array of arrays");
  std::vector<std::vector<double>> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(numbers_at(j[i], path + "/" + std::to_string(i)));
  return out;
}

FamilySpec parse_family(const json& j) {
  FamilySpec f;
  if (j.is_string()) {
    f.builtin = j.get<std::string>();
    return f;
  }
  object_at(j, "/family");
  only_keys(j, "/family", {"name", "base", "location", "scale"});
  LocationScaleSpec s;
  if (!j.contains("name")) fail("/family/name", "user families need a name");
  s.name = string_at(j["name"], "/family/name");
  if (j.contains("base")) s.base = string_at(j["base"], "/family/base");
  if (j.contains("location")) {
    const json& loc = j["location"];
    if (loc.is_string()) {
      if (loc.get<std::string>() != "free") fail("/family/location", "expected \"free\" or a number");
    } else {
      s.location_free = false;
      s.location_value = number_at(loc, "/family/location");
    }
  }
  if (j.contains("scale")) {
    const json& sc = j["scale"];
    if (sc.is_string()) {
      const std::string v = sc.get<std::string>();
      if (v == "free") s.scale_mode = ScaleMode::Free;
      else if (v == "log") s.scale_mode = ScaleMode::Log;
      else fail("/family/scale", "expected \"free\", \"log\" or a number");
    } else {
      s.scale_mode = ScaleMode::Fixed;
      s.scale_value = number_at(sc, "/family/scale");
    }
  }
  f.user = s;
  return f;
}

json family_json(const FamilySpec& f) {
  if (!f.user) return f.builtin;
  const LocationScaleSpec& s = *f.user;
  json j;
  j["name"] = s.name;
  j["base"] = s.base;
  j["location"] = s.location_free ? json("free") : json(s.location_value);
  switch (s.scale_mode) {
    case ScaleMode::Free: j["scale"] = "free"; break;
    case ScaleMode::Log: j["scale"] = "log"; break;
    case ScaleMode::Fixed: j["scale"] = s.scale_value; break;
  }
  return j;
}

void parse_numerics(const json& j, NumericsConfig& cfg) {
  object_at(j, "/numerics");
  std::set<std::string> known;
  NumericsConfig::visit_fields(cfg, [&](const char* name, auto& field) {
    known.insert(name);
    if (!j.contains(name)) return;
    const std::string path = std::string("/numerics/") + name;
    using T = std::decay_t<decltype(field)>;
    if constexpr (std::is_same_v<T, bool>) {
      if (!j[name].is_boolean()) fail(path, "expected true or false");
      field = j[name].get<bool>();
    } else if constexpr (std::is_same_v<T, int>) {
      field = int_at(j[name], path);
    } else {
      field = number_at(j[name], path);
    }
  });
  for (const auto& [key, _] : j.items()) {
    if (!known.contains(key)) fail("/numerics/" + key, "unknown numerics field");
  }
}

json numerics_json(const NumericsConfig& cfg, bool with_workers) {
  json j = json::object();
  NumericsConfig::visit_fields(cfg, [&](const char* name, const auto& field) {
    if (!with_workers && std::string_view(name) == "workers") return;
    j[name] = field;
  });
  return j;
}

json to_json(const ExperimentConfig& c, bool with_workers) {
  json j;
  j["task"] = to_string(c.task);
  j["family"] = family_json(c.family);
  json priors = json::array();
  for (const PriorSpec& p : c.priors) {
    if (p.expression.empty()) priors.push_back(p.name);
    else priors.push_back({{"name", p.name}, {"expression", p.expression}});
  }
  j["priors"] = priors;
  json grid = json::object();
  if (!c.theta_grid.points.empty()) grid["points"] = c.theta_grid.points;
  if (!c.theta_grid.axes.empty()) grid["axes"] = c.theta_grid.axes;
  j["theta_grid"] = grid;
  j["alphas"] = c.alphas;
  if (c.coverage) {
    j["coverage"] = {{"theta0", c.coverage->theta0},
                     {"n", c.coverage->n},
                     {"replicates", c.coverage->replicates},
                     {"kind", c.coverage->kind}};
  }
  j["numerics"] = numerics_json(c.numerics, with_workers);
  j["seed"] = c.seed;
  j["output"] = {{"dir", c.output.dir}, {"stem", c.output.stem}, {"format", c.output.format}};
  json asserts = json::array();
  for (const Assertion& a : c.assertions) {
    asserts.push_back({{"row", a.row}, {"metric", a.metric}, {"op", a.op}, {"value", a.value}});
  }
  j["assertions"] = asserts;
  return j;
}

// Line and column (both 1-based) of a byte offset.
std::pair<std::size_t, std::size_t> line_col(const std::string& text, std::size_t offset) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

}  // namespace

std::string to_string(Task task) {
  for (const auto& [t, name] : kTaskNames)
    if (t == task) return name;
  return "unknown";
}

Task task_from_string(const std::string& name) {
  for (const auto& [t, n] : kTaskNames)
    if (name == n) return t;
  throw ConfigError("unknown task '" + name + "'");
}

FamilyPtr FamilySpec::build() const {
  if (user) return make_location_scale_family(*user);
  return builtin_family(builtin);
}

std::vector<ParamVec> ThetaGrid::expand() const {
  std::vector<ParamVec> out;
  for (const auto& p : points) out.push_back(to_param(p));
  if (axes.empty()) return out;
  std::size_t total = 1;
  for (const auto& a : axes) total *= a.size();
  for (std::size_t flat = 0; flat < total; ++flat) {
    std::size_t rem = flat;
    ParamVec t(static_cast<Eigen::Index>(axes.size()));
    // First axis varies slowest.
    for (std::size_t i = axes.size(); i-- > 0;) {
      t(static_cast<Eigen::Index>(i)) = axes[i][rem % axes[i].size()];
      rem /= axes[i].size();
    }
    out.push_back(t);
  }
  return out;
}

bool Assertion::holds(double measured) const {
  if (op == "<=") return measured <= value;
  if (op == "<") return measured < value;
  if (op == ">=") return measured >= value;
  if (op == ">") return measured > value;
  if (op == "==") return measured == value;
  return false;
}

std::vector<double> ExperimentConfig::alpha_list() const {
  return alphas.empty() ? default_alpha_sweep() : alphas;
}

void ExperimentConfig::validate() const {
  numerics.validate();
  const FamilyPtr fam = family.build();
  const int p = fam->param_dim();

  for (std::size_t i = 0; i < alphas.size(); ++i) {
    if (!(alphas[i] > 0.0 && alphas[i] < 1.0)) fail("/alphas/" + std::to_string(i), "alpha must lie in (0,1)");
  }
  for (std::size_t i = 0; i < priors.size(); ++i) {
    const std::string path = "/priors/" + std::to_string(i);
    if (priors[i].name.empty()) fail(path, "prior needs a name");
    try {
      (void)resolve_prior(*fam, priors[i], numerics);
    } catch (const ConfigError& e) {
      fail(path, e.what());
    }
  }

  if (!theta_grid.points.empty() && !theta_grid.axes.empty()) fail("/theta_grid", "give points or axes, not both");
  for (std::size_t i = 0; i < theta_grid.points.size(); ++i) {
    if (static_cast<int>(theta_grid.points[i].size()) != p)
      fail("/theta_grid/points/" + std::to_string(i), "expected " + std::to_string(p) + " coordinates");
  }
  if (!theta_grid.axes.empty() && static_cast<int>(theta_grid.axes.size()) != p)
    fail("/theta_grid/axes", "expected one axis per parameter (" + std::to_string(p) + ")");
  for (std::size_t i = 0; i < theta_grid.axes.size(); ++i) {
    if (theta_grid.axes[i].empty()) fail("/theta_grid/axes/" + std::to_string(i), "axis is empty");
  }
  for (const ParamVec& t : theta_grid.expand()) {
    if (!fam->in_domain(t)) fail("/theta_grid", "grid point outside the parameter domain");
  }

  const bool needs_grid = task != Task::Coverage;
  if (needs_grid && theta_grid.expand().empty()) fail("/theta_grid", "grid is empty");
  const bool needs_priors = task == Task::Residual || task == Task::HpdResidual || task == Task::Coverage;
  if (needs_priors && priors.empty()) fail("/priors", "task " + to_string(task) + " needs at least one prior");
  if ((task == Task::Residual || task == Task::Upmp || task == Task::Fields) && fam->obs_dim() != 1)
    fail("/task", to_string(task) + " needs a univariate family");

  if (task == Task::Coverage) {
    if (!coverage) fail("/coverage", "task coverage needs a coverage block");
    if (alphas.empty()) fail("/alphas", "task coverage needs an explicit alpha list");
    if (static_cast<int>(coverage->theta0.size()) != p) fail("/coverage/theta0", "expected " + std::to_string(p) + " coordinates");
    if (!fam->in_domain(to_param(coverage->theta0))) fail("/coverage/theta0", "outside the parameter domain");
    if (coverage->n < 1) fail("/coverage/n", "sample size must be positive");
    if (coverage->replicates < 100) fail("/coverage/replicates", "need at least 100 replicates");
    if (coverage->kind != "quantile" && coverage->kind != "hpd") fail("/coverage/kind", "expected quantile or hpd");
    if (coverage->kind == "quantile" && fam->obs_dim() != 1) fail("/coverage/kind", "quantile coverage needs a univariate family");
  }
  if (output.format != "csv" && output.format != "json" && output.format != "both")
    fail("/output/format", "expected csv, json or both");
  static const std::set<std::string> ops = {"<=", "<", ">=", ">", "=="};
  for (std::size_t i = 0; i < assertions.size(); ++i) {
    const std::string path = "/assertions/" + std::to_string(i);
    if (!ops.contains(assertions[i].op)) fail(path + "/op", "expected one of <= < >= > ==");
    if (assertions[i].row.empty()) fail(path + "/row", "row is empty");
    if (assertions[i].metric.empty()) fail(path + "/metric", "metric is empty");
  }
}

std::string ExperimentConfig::hash() const { return hex64(fnv1a(to_json(*this, false).dump())); }

ExperimentConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text, nullptr, true, true);
  } catch (const json::parse_error& e) {
    const auto [line, col] = line_col(text, e.byte > 0 ? e.byte - 1 : 0);
    std::string msg = e.what();
    if (const auto at = msg.find("syntax error"); at != std::string::npos) msg = msg.substr(at);
    throw ConfigError("config line " + std::to_string(line) + ", column " + std::to_string(col) + ": " + msg);
  }
  object_at(j, "");
  only_keys(j, "", {"task", "family", "priors", "theta_grid", "alphas", "coverage", "numerics", "seed", "output",
                    "assertions"});
  ExperimentConfig c;
  if (!j.contains("task")) fail("/task", "missing");
  try {
    c.task = task_from_string(string_at(j["task"], "/task"));
  } catch (const ConfigError& e) {
    fail("/task", e.what());
  }
  if (!j.contains("family")) fail("/family", "missing");
  c.family = parse_family(j["family"]);
  if (j.contains("priors")) {
    const json& ps = j["priors"];
    if (!ps.is_array()) fail("/priors", "expected an array");
    for (std::size_t i = 0; i < ps.size(); ++i) {
      const std::string path = "/priors/" + std::to_string(i);
      PriorSpec spec;
      if (ps[i].is_string()) {
        spec.name = ps[i].get<std::string>();
      } else {
        object_at(ps[i], path);
        only_keys(ps[i], path, {"name", "expression"});
        if (!ps[i].contains("name")) fail(path + "/name", "missing");
        spec.name = string_at(ps[i]["name"], path + "/name");
        if (ps[i].contains("expression")) spec.expression = string_at(ps[i]["expression"], path + "/expression");
      }
      c.priors.push_back(std::move(spec));
    }
  }
  if (j.contains("theta_grid")) {
    const json& g = object_at(j["theta_grid"], "/theta_grid");
    only_keys(g, "/theta_grid", {"points", "axes"});
    if (g.contains("points")) c.theta_grid.points = rows_at(g["points"], "/theta_grid/points");
    if (g.contains("axes")) c.theta_grid.axes = rows_at(g["axes"], "/theta_grid/axes");
  }
  if (j.contains("alphas")) c.alphas = numbers_at(j["alphas"], "/alphas");
  if (j.contains("coverage")) {
    const json& cv = object_at(j["coverage"], "/coverage");
    only_keys(cv, "/coverage", {"theta0", "n", "replicates", "kind"});
    CoverageSpec s;
    if (cv.contains("theta0")) s.theta0 = numbers_at(cv["theta0"], "/coverage/theta0");
    if (cv.contains("n")) s.n = int_at(cv["n"], "/coverage/n");
    if (cv.contains("replicates")) s.replicates = int_at(cv["replicates"], "/coverage/replicates");
    if (cv.contains("kind")) s.kind = string_at(cv["kind"], "/coverage/kind");
    c.coverage = s;
  }
  if (j.contains("numerics")) parse_numerics(j["numerics"], c.numerics);
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) fail("/seed", "expected a non-negative integer");
    c.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("output")) {
    const json& o = object_at(j["output"], "/output");
    only_keys(o, "/output", {"dir", "stem", "format"});
    if (o.contains("dir")) c.output.dir = string_at(o["dir"], "/output/dir");
    if (o.contains("stem")) c.output.stem = string_at(o["stem"], "/output/stem");
    if (o.contains("format")) c.output.format = string_at(o["format"], "/output/format");
  }
  if (j.contains("assertions")) {
    const json& as = j["assertions"];
    if (!as.is_array()) fail("/assertions", "expected an array");
    for (std::size_t i = 0; i < as.size(); ++i) {
      const std::string path = "/assertions/" + std::to_string(i);
      object_at(as[i], path);
      only_keys(as[i], path, {"row", "metric", "op", "value"});
      Assertion a;
      for (const char* key : {"row", "metric", "op", "value"}) {
        if (!as[i].contains(key)) fail(path + "/" + key, "missing");
      }
      a.row = string_at(as[i]["row"], path + "/row");
      a.metric = string_at(as[i]["metric"], path + "/metric");
      a.op = string_at(as[i]["op"], path + "/op");
      a.value = number_at(as[i]["value"], path + "/value");
      c.assertions.push_back(std::move(a));
    }
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string serialize_config(const ExperimentConfig& cfg) { return to_json(cfg, true).dump(2) + "\n"; }

PriorField resolve_prior(const ParametricFamily& fam, const PriorSpec& spec, const NumericsConfig& cfg) {
  if (!spec.expression.empty()) return expression_prior(spec.name, spec.expression, fam.param_dim(), cfg);
  return fam.prior(spec.name);
}

}  // namespace pmp
