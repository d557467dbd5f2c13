#include "tlreg/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "tlreg/errors.hpp"

namespace tlreg {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& field, const std::string& what) {
  throw Error(ErrorKind::kConfigError, "field '" + field + "': " + what);
}

std::string join(const std::string& parent, const std::string& key) {
  return parent.empty() ? key : parent + "." + key;
}

void allow_keys(const json& j, const std::string& field, std::initializer_list<const char*> keys) {
  if (!j.is_object()) fail(field, "expected an object");
  const std::set<std::string> known(keys.begin(), keys.end());
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) fail(join(field, key), "unknown key");
  }
}

double number(const json& j, const std::string& field) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf" || s == "+inf") return kInfinity;
  }
  fail(field, "expected a number or \"inf\"");
}

json number_json(double v) {
  if (v == kInfinity) return "inf";
  return v;
}

double number_or(const json& j, const char* key, const std::string& field, double fallback) {
  return j.contains(key) ? number(j.at(key), join(field, key)) : fallback;
}

std::vector<double> number_list(const json& j, const std::string& field) {
  if (!j.is_array()) fail(field, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t k = 0; k < j.size(); ++k) {
    out.push_back(number(j[k], field + "[" + std::to_string(k) + "]"));
  }
  return out;
}

json list_json(const std::vector<double>& v) {
  json out = json::array();
  for (const double x : v) out.push_back(number_json(x));
  return out;
}

int integer(const json& j, const std::string& field) {
  if (!j.is_number_integer()) fail(field, "expected an integer");
  return j.get<int>();
}

std::string text(const json& j, const std::string& field) {
  if (!j.is_string()) fail(field, "expected a string");
  return j.get<std::string>();
}

bool flag(const json& j, const std::string& field) {
  if (!j.is_boolean()) fail(field, "expected true or false");
  return j.get<bool>();
}

std::vector<double> read_value_file(const fs::path& path, const std::string& field) {
  std::ifstream in(path);
  if (!in) fail(field, "cannot open file " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    fail(field, "file " + path.string() + " is not valid JSON");
  }
  return number_list(j, field + " (" + path.string() + ")");
}

FunctionSpec parse_function(const json& j, const std::string& field, const fs::path& base) {
  FunctionSpec spec;
  if (j.is_number() || j.is_string()) {
    spec.value = number(j, field);
    return spec;
  }
  if (j.is_array()) {
    spec.kind = FunctionSpec::Kind::kArray;
    spec.values = number_list(j, field);
    return spec;
  }
  if (!j.is_object()) fail(field, "expected a number, array or object");
  if (j.contains("file")) {
    allow_keys(j, field, {"file"});
    spec.kind = FunctionSpec::Kind::kFile;
    spec.file = fs::weakly_canonical(base / text(j.at("file"), join(field, "file")));
    if (!fs::exists(spec.file)) fail(join(field, "file"), "missing file " + spec.file.string());
    read_value_file(spec.file, join(field, "file"));
    return spec;
  }
  allow_keys(j, field, {"type", "value", "amplitude", "decay", "modes"});
  const std::string type = j.contains("type") ? text(j.at("type"), join(field, "type")) : "";
  if (type == "constant") {
    spec.value = number(j.value("value", json(0.0)), join(field, "value"));
  } else if (type == "sine-series") {
    spec.kind = FunctionSpec::Kind::kSineSeries;
    spec.amplitude = number_or(j, "amplitude", field, 1.0);
    spec.decay = number_or(j, "decay", field, 1.0);
    spec.modes = j.contains("modes") ? integer(j.at("modes"), join(field, "modes")) : 1;
    if (spec.modes < 1) fail(join(field, "modes"), "must be at least 1");
    if (!std::isfinite(spec.amplitude) || !std::isfinite(spec.decay)) {
      fail(field, "sine series parameters must be finite");
    }
  } else {
    fail(join(field, "type"), "expected \"constant\" or \"sine-series\"");
  }
  return spec;
}

json function_json(const FunctionSpec& spec) {
  switch (spec.kind) {
    case FunctionSpec::Kind::kConstant: return number_json(spec.value);
    case FunctionSpec::Kind::kArray: return list_json(spec.values);
    case FunctionSpec::Kind::kFile: return {{"file", spec.file.string()}};
    case FunctionSpec::Kind::kSineSeries:
      return {{"type", "sine-series"},
              {"amplitude", spec.amplitude},
              {"decay", spec.decay},
              {"modes", spec.modes}};
  }
  return nullptr;
}

OperatorSpec parse_operator(const json& j) {
  const std::string f = "operator";
  allow_keys(j, f, {"kind", "d", "n", "kernel"});
  OperatorSpec spec;
  const std::string kind = text(j.at("kind"), "operator.kind");
  if (kind == "poisson") {
    spec.kind = OperatorKind::kPoisson;
  } else if (kind == "fredholm") {
    spec.kind = OperatorKind::kFredholm;
  } else {
    fail("operator.kind", "expected \"poisson\" or \"fredholm\"");
  }
  spec.d = j.contains("d") ? integer(j.at("d"), "operator.d") : 1;
  if (spec.d != 1 && spec.d != 2) fail("operator.d", "must be 1 or 2");
  if (!j.contains("n")) fail("operator.n", "missing");
  spec.n = integer(j.at("n"), "operator.n");
  if (spec.n < 3) fail("operator.n", "must be at least 3");
  if (j.contains("kernel")) {
    const json& k = j.at("kernel");
    allow_keys(k, "operator.kernel", {"type", "scale", "width"});
    const std::string type = text(k.at("type"), "operator.kernel.type");
    if (type == "constant") {
      spec.kernel.type = KernelSpec::Type::kConstant;
    } else if (type == "separable") {
      spec.kernel.type = KernelSpec::Type::kSeparable;
    } else if (type == "gaussian") {
      spec.kernel.type = KernelSpec::Type::kGaussian;
    } else {
      fail("operator.kernel.type", "expected constant, separable or gaussian");
    }
    spec.kernel.scale = number_or(k, "scale", "operator.kernel", 1.0);
    spec.kernel.width = number_or(k, "width", "operator.kernel", 0.1);
  } else if (spec.kind == OperatorKind::kFredholm) {
    fail("operator.kernel", "missing for a fredholm operator");
  }
  return spec;
}

Point parse_point(const json& j, int d, const std::string& field) {
  const auto v = number_list(j, field);
  if (static_cast<int>(v.size()) != d) fail(field, "expected " + std::to_string(d) + " coordinates");
  Point p{0.0, 0.0};
  for (int a = 0; a < d; ++a) p[static_cast<size_t>(a)] = v[static_cast<size_t>(a)];
  return p;
}

AdmissibleSpec parse_admissible(const json& j, int d, const fs::path& base) {
  const std::string f = "admissible";
  allow_keys(j, f, {"b", "psi", "region", "lambda", "sign", "slater_point"});
  AdmissibleSpec spec;
  if (j.contains("b")) spec.b = parse_function(j.at("b"), "admissible.b", base);
  if (j.contains("psi")) spec.psi = parse_function(j.at("psi"), "admissible.psi", base);
  if (j.contains("region")) {
    const json& r = j.at("region");
    allow_keys(r, "admissible.region", {"lower", "upper", "inner"});
    spec.region.whole_domain = false;
    spec.region.lower = parse_point(r.at("lower"), d, "admissible.region.lower");
    spec.region.upper = parse_point(r.at("upper"), d, "admissible.region.upper");
    spec.region.inner = r.contains("inner") ? flag(r.at("inner"), "admissible.region.inner") : false;
  }
  spec.lambda = number_or(j, "lambda", f, 0.0);
  if (!(spec.lambda >= 0.0) || !std::isfinite(spec.lambda)) {
    fail("admissible.lambda", "must be finite and >= 0");
  }
  if (j.contains("sign")) {
    const std::string sign = text(j.at("sign"), "admissible.sign");
    if (sign == "plus") {
      spec.sign = LavrentievSign::kPlus;
    } else if (sign == "minus") {
      spec.sign = LavrentievSign::kMinus;
    } else {
      fail("admissible.sign", "expected \"plus\" or \"minus\"");
    }
  }
  if (j.contains("slater_point")) {
    spec.slater_point = parse_function(j.at("slater_point"), "admissible.slater_point", base);
  }
  return spec;
}

DataSpec parse_data(const json& j, const fs::path& base) {
  allow_keys(j, "data", {"kind", "w", "attainable", "residual", "y_d"});
  DataSpec spec;
  const std::string kind = text(j.at("kind"), "data.kind");
  if (kind == "manufactured") {
    spec.kind = DataSpec::Kind::kManufactured;
    if (!j.contains("w")) fail("data.w", "missing for manufactured data");
    spec.w = parse_function(j.at("w"), "data.w", base);
    spec.attainable = j.contains("attainable") ? flag(j.at("attainable"), "data.attainable") : true;
    spec.residual = number_or(j, "residual", "data", 0.0);
    if (!(spec.residual >= 0.0) || !std::isfinite(spec.residual)) {
      fail("data.residual", "must be finite and >= 0");
    }
  } else if (kind == "given") {
    spec.kind = DataSpec::Kind::kGiven;
    if (!j.contains("y_d")) fail("data.y_d", "missing for given data");
    spec.y_d = parse_function(j.at("y_d"), "data.y_d", base);
  } else {
    fail("data.kind", "expected \"manufactured\" or \"given\"");
  }
  return spec;
}

ExperimentKind experiment_kind(const std::string& s) {
  if (s == "sweep-alpha") return ExperimentKind::kSweepAlpha;
  if (s == "activity") return ExperimentKind::kActivity;
  if (s == "noise") return ExperimentKind::kNoise;
  if (s == "lavrentiev") return ExperimentKind::kLavrentiev;
  if (s == "total-error") return ExperimentKind::kTotalError;
  if (s == "continuity") return ExperimentKind::kContinuity;
  fail("experiment.kind",
       "expected sweep-alpha, activity, noise, lavrentiev, total-error or continuity");
}

void require_positive(const std::vector<double>& v, const std::string& field) {
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (!(v[k] > 0.0) || !std::isfinite(v[k])) {
      fail(field + "[" + std::to_string(k) + "]", "must be positive and finite");
    }
  }
}

ExperimentSpec parse_experiment(const json& j) {
  allow_keys(j, "experiment", {"kind", "alphas", "lambdas", "deltas", "pairs", "rule", "alpha",
                               "lambda_cap", "tau", "expect"});
  ExperimentSpec spec;
  spec.kind = experiment_kind(text(j.at("kind"), "experiment.kind"));
  if (j.contains("alphas")) spec.alphas = number_list(j.at("alphas"), "experiment.alphas");
  if (j.contains("lambdas")) spec.lambdas = number_list(j.at("lambdas"), "experiment.lambdas");
  if (j.contains("deltas")) spec.deltas = number_list(j.at("deltas"), "experiment.deltas");
  require_positive(spec.alphas, "experiment.alphas");
  require_positive(spec.deltas, "experiment.deltas");
  for (std::size_t k = 0; k < spec.lambdas.size(); ++k) {
    if (!(spec.lambdas[k] >= 0.0) || !std::isfinite(spec.lambdas[k])) {
      fail("experiment.lambdas[" + std::to_string(k) + "]", "must be finite and >= 0");
    }
  }
  if (j.contains("pairs")) {
    const json& p = j.at("pairs");
    if (!p.is_array()) fail("experiment.pairs", "expected an array of [alpha, beta] pairs");
    for (std::size_t k = 0; k < p.size(); ++k) {
      const std::string f = "experiment.pairs[" + std::to_string(k) + "]";
      const auto v = number_list(p[k], f);
      if (v.size() != 2) fail(f, "expected [alpha, beta]");
      require_positive(v, f);
      spec.pairs.emplace_back(v[0], v[1]);
    }
  }
  if (j.contains("rule")) {
    const json& r = j.at("rule");
    allow_keys(r, "experiment.rule", {"c", "s"});
    spec.rule.c = number_or(r, "c", "experiment.rule", 1.0);
    spec.rule.s = number_or(r, "s", "experiment.rule", 2.0 / 3.0);
  }
  spec.alpha = number_or(j, "alpha", "experiment", 1e-2);
  if (!(spec.alpha > 0.0) || !std::isfinite(spec.alpha)) {
    fail("experiment.alpha", "must be positive and finite");
  }
  spec.lambda_cap = number_or(j, "lambda_cap", "experiment", kInfinity);
  if (!(spec.lambda_cap >= 0.0)) fail("experiment.lambda_cap", "must be >= 0");
  if (j.contains("tau")) spec.tau = number(j.at("tau"), "experiment.tau");
  if (j.contains("expect")) {
    const json& e = j.at("expect");
    allow_keys(e, "experiment.expect", {"slope", "c_fit_ratio", "coincidence", "inactive_at_smallest"});
    if (e.contains("slope")) {
      const auto v = number_list(e.at("slope"), "experiment.expect.slope");
      if (v.size() != 2 || !(v[0] <= v[1])) fail("experiment.expect.slope", "expected [lo, hi]");
      spec.expect.slope = std::make_pair(v[0], v[1]);
    }
    if (e.contains("c_fit_ratio")) {
      spec.expect.c_fit_ratio = number(e.at("c_fit_ratio"), "experiment.expect.c_fit_ratio");
    }
    if (e.contains("coincidence")) {
      spec.expect.coincidence = flag(e.at("coincidence"), "experiment.expect.coincidence");
    }
    if (e.contains("inactive_at_smallest")) {
      spec.expect.inactive_at_smallest =
          flag(e.at("inactive_at_smallest"), "experiment.expect.inactive_at_smallest");
    }
  }
  return spec;
}

ObservationRegion build_region(const RegionSpec& spec, const DomainGrid& grid) {
  if (spec.whole_domain) return ObservationRegion::all(grid);
  return ObservationRegion::box(grid, spec.lower, spec.upper, spec.inner);
}

// Grid and region sizes are cheap to compute, so every function spec is
// resolved once here to catch length mismatches before any solve.
void cross_check(const RunConfig& c) {
  const DomainGrid grid(c.op.d, c.op.n);
  std::vector<Index> all(static_cast<size_t>(grid.size()));
  for (Index i = 0; i < grid.size(); ++i) all[static_cast<size_t>(i)] = i;
  const auto region = [&]() {
    try {
      return build_region(c.admissible.region, grid);
    } catch (const Error& e) {
      fail("admissible.region", e.what());
    }
  }();
  const Eigen::VectorXd b = resolve_values(c.admissible.b, grid, all, "admissible.b");
  for (Index i = 0; i < b.size(); ++i) {
    if (!(b[i] >= 0.0)) fail("admissible.b", "upper bounds must be >= 0");
  }
  resolve_values(c.admissible.psi, grid, region.indices(), "admissible.psi");
  resolve_values(c.admissible.slater_point, grid, all, "admissible.slater_point");
  if (c.data.kind == DataSpec::Kind::kManufactured) {
    resolve_values(c.data.w, grid, all, "data.w");
  } else {
    resolve_values(c.data.y_d, grid, all, "data.y_d");
  }
}

}  // namespace

static RunConfig parse_document(const json& j, const fs::path& base_dir);

const char* to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::kSweepAlpha: return "sweep-alpha";
    case ExperimentKind::kActivity: return "activity";
    case ExperimentKind::kNoise: return "noise";
    case ExperimentKind::kLavrentiev: return "lavrentiev";
    case ExperimentKind::kTotalError: return "total-error";
    case ExperimentKind::kContinuity: return "continuity";
  }
  return "?";
}

Eigen::VectorXd resolve_values(const FunctionSpec& spec, const DomainGrid& grid,
                               const std::vector<Index>& nodes, const std::string& field) {
  const Index count = static_cast<Index>(nodes.size());
  Eigen::VectorXd out(count);
  const auto from_list = [&](const std::vector<double>& v) {
    if (static_cast<Index>(v.size()) != count) {
      fail(field, "has " + std::to_string(v.size()) + " values, expected " +
                      std::to_string(count));
    }
    for (Index k = 0; k < count; ++k) out[k] = v[static_cast<size_t>(k)];
  };
  switch (spec.kind) {
    case FunctionSpec::Kind::kConstant: out.setConstant(spec.value); break;
    case FunctionSpec::Kind::kArray: from_list(spec.values); break;
    case FunctionSpec::Kind::kFile: from_list(read_value_file(spec.file, field + ".file")); break;
    case FunctionSpec::Kind::kSineSeries:
      for (Index k = 0; k < count; ++k) {
        const Point x = grid.coordinate(nodes[static_cast<size_t>(k)]);
        double s = 0.0;
        for (int m = 1; m <= spec.modes; ++m) {
          double term = std::pow(static_cast<double>(m), -spec.decay);
          for (int a = 0; a < grid.dimension(); ++a) term *= std::sin(m * M_PI * x[static_cast<size_t>(a)]);
          s += term;
        }
        out[k] = spec.amplitude * s;
      }
      break;
  }
  return out;
}

GridFunction resolve_function(const FunctionSpec& spec, const DomainGrid& grid,
                              const std::string& field) {
  std::vector<Index> all(static_cast<size_t>(grid.size()));
  for (Index i = 0; i < grid.size(); ++i) all[static_cast<size_t>(i)] = i;
  return GridFunction(grid, resolve_values(spec, grid, all, field));
}

RunConfig parse_config(const json& j, const fs::path& base_dir) {
  try {
    return parse_document(j, base_dir);
  } catch (const json::exception& e) {
    fail("config", e.what());
  }
}

static RunConfig parse_document(const json& j, const fs::path& base_dir) {
  allow_keys(j, "", {"operator", "admissible", "data", "alpha", "experiment", "out", "tol", "seed",
                     "record_timing"});
  RunConfig c;
  if (!j.contains("operator")) fail("operator", "missing");
  c.op = parse_operator(j.at("operator"));
  if (j.contains("admissible")) c.admissible = parse_admissible(j.at("admissible"), c.op.d, base_dir);
  if (!j.contains("data")) fail("data", "missing");
  c.data = parse_data(j.at("data"), base_dir);
  c.alpha = number_or(j, "alpha", "", 1e-2);
  if (!(c.alpha > 0.0) || !std::isfinite(c.alpha)) fail("alpha", "must be positive and finite");
  if (j.contains("experiment")) c.experiment = parse_experiment(j.at("experiment"));
  if (j.contains("out")) c.out_dir = text(j.at("out"), "out");
  c.tol = number_or(j, "tol", "", 1e-8);
  if (!(c.tol > 0.0) || !std::isfinite(c.tol)) fail("tol", "must be positive and finite");
  if (j.contains("seed")) {
    if (!j.at("seed").is_number_unsigned()) fail("seed", "expected an unsigned integer");
    c.seed = j.at("seed").get<std::uint64_t>();
  }
  if (j.contains("record_timing")) c.record_timing = flag(j.at("record_timing"), "record_timing");
  cross_check(c);
  return c;
}

RunConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail("--config", "cannot open " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    fail("--config", path.string() + " is not valid JSON: " + e.what());
  }
  return parse_config(j, path.has_parent_path() ? path.parent_path() : fs::path("."));
}

json to_json(const RunConfig& c) {
  const json op = {{"kind", to_string(c.op.kind)},
                   {"d", c.op.d},
                   {"n", c.op.n},
                   {"kernel",
                    {{"type", to_string(c.op.kernel.type)},
                     {"scale", c.op.kernel.scale},
                     {"width", c.op.kernel.width}}}};
  json adm = {{"b", function_json(c.admissible.b)},
              {"psi", function_json(c.admissible.psi)},
              {"lambda", c.admissible.lambda},
              {"sign", to_string(c.admissible.sign)},
              {"slater_point", function_json(c.admissible.slater_point)}};
  if (!c.admissible.region.whole_domain) {
    const auto& r = c.admissible.region;
    json lower = json::array(), upper = json::array();
    for (int a = 0; a < c.op.d; ++a) {
      lower.push_back(r.lower[static_cast<size_t>(a)]);
      upper.push_back(r.upper[static_cast<size_t>(a)]);
    }
    adm["region"] = {{"lower", lower}, {"upper", upper}, {"inner", r.inner}};
  }
  json data;
  if (c.data.kind == DataSpec::Kind::kManufactured) {
    data = {{"kind", "manufactured"},
            {"w", function_json(c.data.w)},
            {"attainable", c.data.attainable},
            {"residual", c.data.residual}};
  } else {
    data = {{"kind", "given"}, {"y_d", function_json(c.data.y_d)}};
  }
  json out = {{"operator", op},
              {"admissible", adm},
              {"data", data},
              {"alpha", c.alpha},
              {"out", c.out_dir.string()},
              {"tol", c.tol},
              {"seed", c.seed},
              {"record_timing", c.record_timing}};
  if (c.experiment) {
    const ExperimentSpec& e = *c.experiment;
    json pairs = json::array();
    for (const auto& [a, b] : e.pairs) pairs.push_back({a, b});
    json ex = {{"kind", to_string(e.kind)},
               {"alphas", list_json(e.alphas)},
               {"lambdas", list_json(e.lambdas)},
               {"deltas", list_json(e.deltas)},
               {"pairs", pairs},
               {"rule", {{"c", e.rule.c}, {"s", e.rule.s}}},
               {"alpha", e.alpha},
               {"lambda_cap", number_json(e.lambda_cap)}};
    if (e.tau) ex["tau"] = number_json(*e.tau);
    json expect = {{"coincidence", e.expect.coincidence},
                   {"inactive_at_smallest", e.expect.inactive_at_smallest}};
    if (e.expect.slope) expect["slope"] = {e.expect.slope->first, e.expect.slope->second};
    if (e.expect.c_fit_ratio) expect["c_fit_ratio"] = number_json(*e.expect.c_fit_ratio);
    ex["expect"] = expect;
    out["experiment"] = ex;
  }
  return out;
}

BuiltSetting build_setting(const RunConfig& c) {
  const DomainGrid grid(c.op.d, c.op.n);
  std::shared_ptr<const AssembledOperator> op =
      c.op.kind == OperatorKind::kPoisson
          ? std::make_shared<const AssembledOperator>(assemble_poisson(grid))
          : std::make_shared<const AssembledOperator>(assemble_fredholm(grid, c.op.kernel));
  const ObservationRegion region = build_region(c.admissible.region, grid);
  const Eigen::VectorXd psi =
      resolve_values(c.admissible.psi, grid, region.indices(), "admissible.psi");
  AdmissibleSet set(op, BoxBounds(resolve_function(c.admissible.b, grid, "admissible.b")),
                    StateConstraint(region, psi, c.admissible.lambda, c.admissible.sign));
  return {op, std::move(set),
          resolve_function(c.admissible.slater_point, grid, "admissible.slater_point")};
}

}  // namespace tlreg
