#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "tlreg/config.hpp"
#include "tlreg/errors.hpp"
#include "tlreg/experiments.hpp"

namespace tlreg {

inline constexpr const char* kVersion = "0.1.0";

/// Process exit codes of the command-line tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 2,
  kExitInfeasible = 3,
  kExitNonConvergence = 4,
  kExitCheckFailed = 5,
};

int exit_code_for(ErrorKind kind);

struct RunReport {
  std::string command;
  nlohmann::json config;   // echo that re-parses to the same RunConfig
  nlohmann::json summary;  // command-specific results
  std::vector<Check> checks;
  std::vector<std::string> manifest;  // files written, relative to the output directory
  std::string version = kVersion;
  double runtime = 0.0;  // seconds
  int exit_code = kExitOk;
  std::string error;  // empty on success
};

nlohmann::json to_json(const RunReport& report);

/// Each command writes its outputs plus report.json into config.out_dir and
/// never throws for library errors; they are mapped onto report.exit_code.
RunReport cmd_solve(const RunConfig& config);
RunReport cmd_verify(const RunConfig& config);
RunReport cmd_manufacture(const RunConfig& config);

}  // namespace tlreg
