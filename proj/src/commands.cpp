#include "tlreg/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <optional>

#include "tlreg/manufacture.hpp"
#include "tlreg/solver.hpp"

namespace tlreg {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json number_json(double v) {
  if (std::isnan(v)) return nullptr;
  if (v == kInfinity) return "inf";
  if (v == -kInfinity) return "-inf";
  return v;
}

json values_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(number_json(v[i]));
  return out;
}

json margins_json(const FeasibilityReport& r) {
  return {{"lower", number_json(r.lower_margin)},
          {"upper", number_json(r.upper_margin)},
          {"state", number_json(r.state_margin)},
          {"feasible", r.feasible}};
}

json active_json(const ActiveSets& a) {
  return {{"lower", a.lower}, {"upper", a.upper}, {"state", a.state}};
}

json kkt_json(const KktResiduals& k) {
  return {{"stationarity", k.stationarity},
          {"primal", k.primal},
          {"dual", k.dual},
          {"complementarity", k.complementarity}};
}

json solution_json(const Solution& s, const RegularizedProblem& problem) {
  return {{"u", values_json(s.u.values())},
          {"y", values_json(s.y.values())},
          {"objective", s.objective},
          {"lower_multiplier", values_json(s.lower_multiplier.values())},
          {"upper_multiplier", values_json(s.upper_multiplier.values())},
          {"state_multiplier", values_json(s.state_multiplier)},
          {"active", active_json(s.active)},
          {"margins", margins_json(feasibility(s.u, problem.set))},
          {"kkt", kkt_json(s.kkt)},
          {"iterations", s.iterations}};
}

json fit_json(const std::optional<RateFit>& fit) {
  if (!fit) return nullptr;
  return {{"slope", fit->slope},         {"intercept", fit->intercept},
          {"alpha_lo", fit->alpha_lo},   {"alpha_hi", fit->alpha_hi},
          {"points", fit->points},       {"residual", fit->residual}};
}

json instance_summary(const ManufacturedInstance& inst) {
  return {{"tau", number_json(inst.tau)},
          {"margins", margins_json(inst.margins)},
          {"w_norm", inst.w_norm},
          {"residual", inst.residual},
          {"interior", inst.interior()},
          {"strong_source", inst.strong_source()}};
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

struct Setting {
  BuiltSetting built;
  GridFunction y_d;
  std::optional<ManufacturedInstance> instance;
};

Setting prepare(const RunConfig& c) {
  BuiltSetting built = build_setting(c);
  const DomainGrid& grid = built.set.grid();
  if (c.data.kind == DataSpec::Kind::kGiven) {
    GridFunction y_d = resolve_function(c.data.y_d, grid, "data.y_d");
    return {std::move(built), std::move(y_d), std::nullopt};
  }
  const GridFunction w = resolve_function(c.data.w, grid, "data.w");
  ManufacturedInstance inst =
      manufacture(w, built.set.with_lambda(0.0), c.data.attainable,
                  c.data.attainable ? 0.0 : c.data.residual, c.seed);
  GridFunction y_d = inst.y_d;
  return {std::move(built), std::move(y_d), std::move(inst)};
}

const ManufacturedInstance& require_instance(const Setting& s, const char* kind) {
  if (!s.instance) {
    throw Error(ErrorKind::kConfigError,
                std::string("field 'data.kind': experiment ") + kind + " needs manufactured data");
  }
  return *s.instance;
}

void write_csv(const RunConfig& c, RunReport& report, const std::vector<SweepRecord>& records) {
  std::ofstream out(c.out_dir / "sweep.csv", std::ios::binary);
  write_sweep_csv(out, records);
  if (!out) throw Error(ErrorKind::kConfigError, "field 'out': cannot write sweep.csv");
  report.manifest.push_back("sweep.csv");
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  out << j.dump(2) << '\n';
  if (!out) throw Error(ErrorKind::kConfigError, "field 'out': cannot write " + path.string());
}

void append(std::vector<Check>& to, const std::vector<Check>& from) {
  to.insert(to.end(), from.begin(), from.end());
}

void expect_slope(const ExperimentSpec& e, const std::optional<RateFit>& fit,
                  std::vector<Check>& checks) {
  if (!e.expect.slope) return;
  const auto [lo, hi] = *e.expect.slope;
  if (!fit) {
    checks.push_back({"slope", false, "fewer than four points above the error floor"});
    return;
  }
  checks.push_back({"slope", fit->slope >= lo && fit->slope <= hi,
                    fmt(fit->slope) + " in [" + fmt(lo) + ", " + fmt(hi) + "]"});
}

RunReport run(const char* name, const RunConfig& c, bool verification,
              const std::function<void(RunReport&)>& body) {
  const auto start = std::chrono::steady_clock::now();
  RunReport report;
  report.command = name;
  report.config = to_json(c);
  try {
    fs::create_directories(c.out_dir);
    body(report);
  } catch (const Error& e) {
    report.exit_code = exit_code_for(e.kind());
    report.error = e.what();
    if (e.kind() == ErrorKind::kNoTransition) report.checks.push_back({"transition", false, e.what()});
  } catch (const fs::filesystem_error& e) {
    report.exit_code = kExitConfig;
    report.error = std::string("field 'out': ") + e.what();
  }
  if (verification && report.checks.empty()) {
    report.checks.push_back({"completed", report.exit_code == kExitOk, report.error});
  }
  if (verification && report.exit_code == kExitOk && !all_passed(report.checks)) {
    report.exit_code = kExitCheckFailed;
  }
  report.runtime = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  try {
    fs::create_directories(c.out_dir);
    report.manifest.push_back("report.json");
    write_json(c.out_dir / "report.json", to_json(report));
  } catch (const std::exception& e) {
    if (!report.manifest.empty() && report.manifest.back() == "report.json") report.manifest.pop_back();
    if (report.exit_code == kExitOk) report.exit_code = kExitConfig;
    if (report.error.empty()) report.error = e.what();
  }
  return report;
}

}  // namespace

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInfeasibleSet:
    case ErrorKind::kInfeasibleProblem:
    case ErrorKind::kLambdaExceedsSlaterCap:
    case ErrorKind::kNotASlaterPoint:
    case ErrorKind::kNoFeasiblePattern:
      return kExitInfeasible;
    case ErrorKind::kNonConvergence:
      return kExitNonConvergence;
    case ErrorKind::kNoTransition:
      return kExitCheckFailed;
    default:
      return kExitConfig;
  }
}

json to_json(const RunReport& r) {
  json checks = json::array();
  for (const auto& c : r.checks) {
    checks.push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
  }
  json out = {{"command", r.command},     {"version", r.version},
              {"exit_code", r.exit_code}, {"config", r.config},
              {"summary", r.summary},     {"checks", checks},
              {"manifest", r.manifest},   {"runtime_seconds", r.runtime}};
  if (!r.error.empty()) out["error"] = r.error;
  return out;
}

RunReport cmd_solve(const RunConfig& c) {
  return run("solve", c, false, [&](RunReport& report) {
    const Setting s = prepare(c);
    const AdmissibleSet& set = s.built.set;
    if (set.state().lambda > 0.0 && set.state().sign == LavrentievSign::kPlus) {
      const SlaterInfo info = slater(set, s.built.slater_point);
      if (set.state().lambda > info.lambda_max) {
        throw Error(ErrorKind::kLambdaExceedsSlaterCap,
                    "lambda " + fmt(set.state().lambda) + " exceeds tau/||u_hat||_inf = " +
                        fmt(info.lambda_max));
      }
    }
    const RegularizedProblem problem(set, s.y_d, c.alpha);
    const Solution sol = solve(problem, c.tol);
    const double residual = projection_formula_residual(sol, problem);
    report.summary = solution_json(sol, problem);
    report.summary["projection_residual"] = residual;
    if (s.instance) report.summary["instance"] = instance_summary(*s.instance);
    report.checks.push_back({"kkt", sol.kkt.max() <= c.tol, fmt(sol.kkt.max())});
    report.checks.push_back({"projection_formula", residual <= 10.0 * c.tol, fmt(residual)});
  });
}

RunReport cmd_manufacture(const RunConfig& c) {
  return run("manufacture", c, false, [&](RunReport& report) {
    if (c.data.kind != DataSpec::Kind::kManufactured) {
      throw Error(ErrorKind::kConfigError, "field 'data.kind': manufacture needs manufactured data");
    }
    const Setting s = prepare(c);
    const ManufacturedInstance& inst = *s.instance;
    write_json(c.out_dir / "instance.json", to_json(inst));
    report.manifest.push_back("instance.json");
    report.summary = instance_summary(inst);
    if (inst.w_norm > 0.0) {
      const OptimalAlpha opt = optimal_alpha(inst.residual, inst.w_norm);
      report.summary["alpha_star"] = opt.alpha;
      report.summary["attainable"] = opt.attainable;
    } else {
      report.summary["alpha_star"] = nullptr;
      report.summary["attainable"] = inst.attainable;
    }
    report.summary["active"] = active_json(classify_activity(inst.u_bar, inst.set));
  });
}

RunReport cmd_verify(const RunConfig& c) {
  return run("verify", c, true, [&](RunReport& report) {
    if (!c.experiment) throw Error(ErrorKind::kConfigError, "field 'experiment': missing");
    const ExperimentSpec& e = *c.experiment;
    const ExperimentOptions options{c.tol, c.record_timing};
    const Setting s = prepare(c);
    json& out = report.summary;
    out["kind"] = to_string(e.kind);
    if (s.instance) out["instance"] = instance_summary(*s.instance);

    switch (e.kind) {
      case ExperimentKind::kSweepAlpha: {
        const auto r = sweep_alpha(require_instance(s, "sweep-alpha"), e.alphas, options);
        write_csv(c, report, r.records);
        out["fit"] = fit_json(r.fit);
        append(report.checks, r.checks);
        expect_slope(e, r.fit, report.checks);
        break;
      }
      case ExperimentKind::kActivity: {
        const auto& inst = require_instance(s, "activity");
        const double tau = e.tau.value_or(inst.tau);
        const auto r = activity_transition(inst, e.alphas, tau, options);
        write_csv(c, report, r.records);
        out["tau"] = tau;
        out["alpha0"] = number_json(r.alpha0);
        out["never_active"] = r.never_active;
        report.checks.push_back({"transition", true,
                                 r.never_active ? "inactive across the list"
                                                : "alpha0 = " + fmt(r.alpha0)});
        break;
      }
      case ExperimentKind::kNoise: {
        const auto& inst = require_instance(s, "noise");
        const auto r = noise_study(inst, e.deltas, e.rule, c.seed, options);
        write_csv(c, report, r.records);
        out["delta0"] = r.delta0 ? json(*r.delta0) : json(nullptr);
        append(report.checks, r.checks);
        if (e.expect.inactive_at_smallest) {
          const auto it = std::min_element(r.records.begin(), r.records.end(),
                                           [](const auto& a, const auto& b) { return a.delta < b.delta; });
          const Index n = it->n_active_lo + it->n_active_up + it->n_active_state;
          report.checks.push_back({"inactive_at_smallest_delta", n == 0,
                                   std::to_string(n) + " active at delta = " + fmt(it->delta)});
        }
        break;
      }
      case ExperimentKind::kLavrentiev: {
        const auto r = lavrentiev_sweep(s.built.set, s.y_d, e.alpha, e.lambdas,
                                        c.admissible.sign, s.built.slater_point, options);
        write_csv(c, report, r.records);
        out["c_fit"] = r.c_fit;
        out["c_min"] = number_json(r.c_min);
        out["lambda_coincide"] = r.lambda_coincide ? json(*r.lambda_coincide) : json(nullptr);
        out["slater"] = {{"tau", r.slater.tau}, {"lambda_max", number_json(r.slater.lambda_max)}};
        append(report.checks, r.checks);
        if (e.expect.c_fit_ratio) {
          const double ratio = r.c_fit / r.c_min;
          report.checks.push_back({"c_fit_stable", std::isfinite(ratio) && ratio < *e.expect.c_fit_ratio,
                                   "c_fit / c_min = " + fmt(ratio)});
        }
        if (e.expect.coincidence) {
          const bool found = r.lambda_coincide && *r.lambda_coincide > 0.0;
          report.checks.push_back({"coincidence", found,
                                   found ? "lambda_coincide = " + fmt(*r.lambda_coincide)
                                         : "no positive lambda reproduces the lambda = 0 solution"});
        }
        break;
      }
      case ExperimentKind::kTotalError: {
        const auto r = total_error_study(require_instance(s, "total-error"), e.alphas,
                                         e.lambda_cap, c.admissible.sign, options);
        write_csv(c, report, r.records);
        out["fit"] = fit_json(r.fit);
        append(report.checks, r.checks);
        expect_slope(e, r.fit, report.checks);
        break;
      }
      case ExperimentKind::kContinuity: {
        const RegularizedProblem problem(s.built.set, s.y_d, e.alpha);
        const auto r = alpha_continuity_check(problem, e.pairs, options);
        json pairs = json::array();
        for (std::size_t k = 0; k < r.pairs.size(); ++k) {
          pairs.push_back({{"alpha", r.pairs[k].first},
                           {"beta", r.pairs[k].second},
                           {"distance", r.distance[k]},
                           {"bound", r.bound[k]}});
          report.checks.push_back({"continuity[" + fmt(r.pairs[k].first) + ", " +
                                       fmt(r.pairs[k].second) + "]",
                                   r.passed[k], fmt(r.distance[k]) + " <= " + fmt(r.bound[k])});
        }
        out["pairs"] = pairs;
        break;
      }
    }
  });
}

}  // namespace tlreg
