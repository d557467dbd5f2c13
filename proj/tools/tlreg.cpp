// Command-line entry point: solve, verify and manufacture.

#include <algorithm>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "tlreg/commands.hpp"

namespace {

struct Options {
  std::string config;
  std::optional<std::string> out;
  std::optional<double> tol;
  std::optional<std::uint64_t> seed;
  bool record_timing = false;
};

void add_common(CLI::App& cmd, Options& o) {
  cmd.add_option("--config", o.config, "JSON run configuration")->required();
  cmd.add_option("--out", o.out, "output directory (overrides the config)");
  cmd.add_option("--tol", o.tol, "solver tolerance, default 1e-8");
  cmd.add_option("--seed", o.seed, "seed for noise and residual directions");
  cmd.add_flag("--record-timing", o.record_timing, "write wall time into sweep.csv");
}

void print(const tlreg::RunReport& report) {
  if (report.summary.is_object()) {
    for (const char* key : {"kind", "tau", "w_norm", "residual", "alpha_star", "alpha0", "delta0",
                            "c_fit", "lambda_coincide", "objective", "projection_residual"}) {
      if (report.summary.contains(key)) {
        std::cout << key << ": " << report.summary.at(key).dump() << '\n';
      }
    }
    if (report.summary.contains("fit") && !report.summary.at("fit").is_null()) {
      std::cout << "slope: " << report.summary.at("fit").at("slope").dump() << '\n';
    }
  }
  int failed = 0;
  for (const auto& c : report.checks) failed += c.passed ? 0 : 1;
  if (!report.checks.empty()) {
    std::cout << "checks: " << report.checks.size() - failed << "/" << report.checks.size()
              << " passed\n";
  }
  for (const auto& c : report.checks) {
    if (!c.passed) std::cout << "  FAIL " << c.name << ": " << c.detail << '\n';
  }
  if (!report.error.empty()) std::cerr << report.error << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tikhonov-Lavrentiev regularization with control and state constraints"};
  app.require_subcommand(1);
  Options opts;
  auto* solve = app.add_subcommand("solve", "solve one regularized problem");
  auto* verify = app.add_subcommand("verify", "run the configured experiment and its checks");
  auto* manufacture = app.add_subcommand("manufacture", "build an instance with a known solution");
  for (auto* cmd : {solve, verify, manufacture}) add_common(*cmd, opts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : tlreg::kExitConfig;
  }

  tlreg::RunConfig config;
  try {
    config = tlreg::load_config(opts.config);
  } catch (const tlreg::Error& e) {
    std::cerr << e.what() << '\n';
    return tlreg::kExitConfig;
  }
  if (opts.out) config.out_dir = *opts.out;
  if (opts.tol) {
    if (!(*opts.tol > 0.0)) {
      std::cerr << "ConfigError: field '--tol': must be positive\n";
      return tlreg::kExitConfig;
    }
    config.tol = *opts.tol;
  }
  if (opts.seed) config.seed = *opts.seed;
  if (opts.record_timing) config.record_timing = true;

  tlreg::RunReport report;
  if (solve->parsed()) {
    report = tlreg::cmd_solve(config);
  } else if (verify->parsed()) {
    report = tlreg::cmd_verify(config);
  } else {
    report = tlreg::cmd_manufacture(config);
  }
  print(report);
  if (std::find(report.manifest.begin(), report.manifest.end(), "report.json") != report.manifest.end()) {
    std::cout << "report: " << (config.out_dir / "report.json").string() << '\n';
  }
  return report.exit_code;
}
