#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "tlreg/admissible.hpp"
#include "tlreg/experiments.hpp"
#include "tlreg/operators.hpp"

namespace tlreg {

/// A grid function as written in a config: a scalar, an explicit array, a JSON
/// file holding an array, or a sine series sum_k amplitude k^-decay prod sin(k pi x).
/// Scalars and array entries may be the string "inf".
struct FunctionSpec {
  enum class Kind { kConstant, kArray, kFile, kSineSeries };
  Kind kind = Kind::kConstant;
  double value = 0.0;
  std::vector<double> values;
  std::filesystem::path file;  // absolute once parsed
  double amplitude = 1.0;
  double decay = 1.0;
  int modes = 1;

  static FunctionSpec constant(double v) { return {Kind::kConstant, v, {}, {}, 1.0, 1.0, 1}; }
  bool operator==(const FunctionSpec&) const = default;
};

struct OperatorSpec {
  OperatorKind kind = OperatorKind::kPoisson;
  int d = 1;
  int n = 32;
  KernelSpec kernel;
  bool operator==(const OperatorSpec&) const = default;
};

/// Axis-aligned box in coordinates; absent means the whole domain.
struct RegionSpec {
  bool whole_domain = true;
  Point lower{0.0, 0.0};
  Point upper{1.0, 1.0};
  bool inner = false;
  bool operator==(const RegionSpec&) const = default;
};

struct AdmissibleSpec {
  FunctionSpec b = FunctionSpec::constant(1.0);
  FunctionSpec psi = FunctionSpec::constant(kInfinity);
  RegionSpec region;
  double lambda = 0.0;
  LavrentievSign sign = LavrentievSign::kPlus;
  FunctionSpec slater_point = FunctionSpec::constant(0.0);
  bool operator==(const AdmissibleSpec&) const = default;
};

struct DataSpec {
  enum class Kind { kManufactured, kGiven };
  Kind kind = Kind::kGiven;
  FunctionSpec w = FunctionSpec::constant(0.0);
  bool attainable = true;
  double residual = 0.0;
  FunctionSpec y_d = FunctionSpec::constant(0.0);
  bool operator==(const DataSpec&) const = default;
};

enum class ExperimentKind { kSweepAlpha, kActivity, kNoise, kLavrentiev, kTotalError, kContinuity };
const char* to_string(ExperimentKind kind);

/// Optional pass/fail expectations layered on top of an experiment's own checks.
struct Expectations {
  std::optional<std::pair<double, double>> slope;  // fitted rate window
  std::optional<double> c_fit_ratio;               // c_fit / c_min must stay below
  bool coincidence = false;                        // a positive lambda_coincide
  bool inactive_at_smallest = false;               // noise: no activity at the smallest delta
  bool operator==(const Expectations&) const = default;
};

struct ExperimentSpec {
  ExperimentKind kind = ExperimentKind::kSweepAlpha;
  std::vector<double> alphas;
  std::vector<double> lambdas;
  std::vector<double> deltas;
  std::vector<std::pair<double, double>> pairs;
  NoiseRule rule;
  double alpha = 1e-2;          // fixed alpha for lavrentiev and continuity
  double lambda_cap = kInfinity;  // total-error: lambda = min(cap, alpha)
  std::optional<double> tau;    // activity margin; defaults to the instance's
  Expectations expect;
  bool operator==(const ExperimentSpec&) const = default;
};

struct RunConfig {
  OperatorSpec op;
  AdmissibleSpec admissible;
  DataSpec data;
  double alpha = 1e-2;
  std::optional<ExperimentSpec> experiment;
  std::filesystem::path out_dir = "out";
  double tol = 1e-8;
  std::uint64_t seed = 0;
  bool record_timing = false;
  bool operator==(const RunConfig&) const = default;
};

/// Parses and validates a config document. Relative file paths resolve against
/// base_dir. Every error is ConfigError and names the offending field.
RunConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir = ".");
RunConfig load_config(const std::filesystem::path& path);
nlohmann::json to_json(const RunConfig& config);

/// Materializes a FunctionSpec on the given nodes; `field` names it in errors.
Eigen::VectorXd resolve_values(const FunctionSpec& spec, const DomainGrid& grid,
                               const std::vector<Index>& nodes, const std::string& field);
GridFunction resolve_function(const FunctionSpec& spec, const DomainGrid& grid,
                              const std::string& field);

/// Operator, admissible set (with the configured lambda and sign) and Slater point.
struct BuiltSetting {
  std::shared_ptr<const AssembledOperator> op;
  AdmissibleSet set;
  GridFunction slater_point;
};
BuiltSetting build_setting(const RunConfig& config);

}  // namespace tlreg
