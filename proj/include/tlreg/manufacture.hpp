#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "json.hpp"

#include "tlreg/admissible.hpp"
#include "tlreg/solver.hpp"

namespace tlreg {

/// Portable 64-bit linear congruential generator (Knuth's MMIX constants).
/// Doubles are built from the top 53 bits, so sequences are identical on every
/// platform.
class LinearGenerator {
 public:
  explicit LinearGenerator(std::uint64_t seed) : engine_(seed) {}

  /// Uniform in [-1, 1).
  double symmetric_uniform() {
    const std::uint64_t bits = engine_() >> 11;
    return 2.0 * (static_cast<double>(bits) * 0x1.0p-53) - 1.0;
  }

 private:
  std::linear_congruential_engine<std::uint64_t, 6364136223846793005ULL,
                                  1442695040888963407ULL, 0ULL>
      engine_;
};

/// Pseudo-random direction of unit weighted norm.
GridFunction random_direction(const DomainGrid& grid, std::uint64_t seed);

/// Exact solution u_bar = P_{U_ad}(S* w) and the data built from it.
struct ManufacturedInstance {
  AdmissibleSet set;  // lambda = 0
  GridFunction w;
  GridFunction u_bar;
  GridFunction y_d;
  bool attainable = true;
  FeasibilityReport margins;
  double tau = 0.0;       // smallest realized margin of u_bar
  double w_norm = 0.0;
  double residual = 0.0;  // ||S u_bar - y_d||

  /// All margins strictly above the activity threshold.
  bool interior() const { return tau > kActivityThreshold; }
  /// u_bar equals S* w, the strong source condition.
  bool strong_source(double tol = 1e-8) const;
};

struct NoisyData {
  GridFunction y_delta;
  double delta = 0.0;
  std::uint64_t seed = 0;
};

struct SourceRecovery {
  GridFunction w_est;
  double certificate = 0.0;             // ||P_{U_ad}(S* w_est) - u_alpha|| at the smallest alpha
  std::vector<double> discrepancy_ratio;  // ||S u_alpha - y_d|| / alpha along the path
  double w_drift = kInfinity;           // ||w_est(last) - w_est(previous)||, inf for one point
};

struct OptimalAlpha {
  double alpha = 0.0;
  bool attainable = false;  // zero residual, alpha* = 0
};

struct PathPoint {
  double alpha;
  Solution solution;
};

/// u_bar = project_admissible(S* w). Attainable: y_d = S u_bar. Otherwise
/// y_d = S u_bar + residual_level * e with e a seeded unit direction.
/// Requires lambda = 0 in the set; propagates InfeasibleSet.
ManufacturedInstance manufacture(const GridFunction& w, const AdmissibleSet& set, bool attainable,
                                 double residual_level = 0.0, std::uint64_t seed = 0,
                                 double tol = 1e-10);

/// y_delta = y_d + delta e / ||e||, so ||y_delta - y_d|| = delta exactly.
NoisyData add_noise(const GridFunction& y_d, double delta, std::uint64_t seed);

/// w_est = -(S u_alpha - y_d) / alpha at the smallest alpha of the path.
/// Errors: EmptyPath.
SourceRecovery recover_source(const std::vector<PathPoint>& path, const GridFunction& y_d,
                              const AdmissibleSet& set, double tol = 1e-10);

/// alpha* = residual / ||w||. Errors: ZeroSourceNorm.
OptimalAlpha optimal_alpha(double residual_norm, double w_norm);

nlohmann::json to_json(const ManufacturedInstance& instance);
/// Restores an instance saved with to_json; the set supplies the operator and
/// constraints and must live on the same grid.
ManufacturedInstance instance_from_json(const nlohmann::json& j, const AdmissibleSet& set);

}  // namespace tlreg
