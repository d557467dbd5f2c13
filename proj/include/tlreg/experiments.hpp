#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tlreg/manufacture.hpp"
#include "tlreg/solver.hpp"

namespace tlreg {

/// One solve inside a parameter study. For Lavrentiev sweeps err_u measures the
/// distance to the lambda = 0 solution at the same alpha; everywhere else it is
/// the distance to u_bar.
struct SweepRecord {
  double alpha = 0.0;
  double lambda = 0.0;
  double delta = 0.0;
  double err_u = 0.0;
  double err_Su = 0.0;  // ||S u - y_d|| against the exact data
  double margin_lo = 0.0;
  double margin_up = 0.0;
  double margin_state = 0.0;
  Index n_active_lo = 0;
  Index n_active_up = 0;
  Index n_active_state = 0;
  int iterations = 0;
  double seconds = 0.0;
};

/// Least-squares line through (log alpha, log err).
struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double alpha_lo = 0.0;
  double alpha_hi = 0.0;
  int points = 0;
  double residual = 0.0;  // root mean square deviation in log space
};

struct Check {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct ExperimentOptions {
  double tol = 1e-8;
  bool record_timing = false;  // wall time in records; off keeps output reproducible
};

/// Fits over records with err_u >= error_floor and alpha inside [alpha_lo, alpha_hi].
/// Returns nothing when fewer than four points qualify.
std::optional<RateFit> fit_rate(const std::vector<SweepRecord>& records, double error_floor,
                                double alpha_lo = 0.0, double alpha_hi = kInfinity);

bool all_passed(const std::vector<Check>& checks);

struct SweepResult {
  std::vector<SweepRecord> records;
  std::vector<Solution> solutions;
  std::optional<RateFit> fit;
  std::vector<Check> checks;
};

/// Tikhonov sweep at lambda = 0 with both a-priori bounds checked per point.
/// alphas: at least four, positive, strictly descending.
SweepResult sweep_alpha(const ManufacturedInstance& instance, const std::vector<double>& alphas,
                        const ExperimentOptions& options = {});

struct ActivityResult {
  std::vector<SweepRecord> records;
  std::vector<bool> inactive;  // per alpha: margins > tau/2 and no active constraint
  double alpha0 = 0.0;         // largest alpha below which every point is inactive
  bool never_active = false;   // inactive across the whole list
};

/// Errors: NoTransition if the smallest alpha still has activity.
ActivityResult activity_transition(const ManufacturedInstance& instance,
                                   const std::vector<double>& alphas, double tau,
                                   const ExperimentOptions& options = {});

/// alpha(delta) = c delta^s with s in (0, 1).
struct NoiseRule {
  double c = 1.0;
  double s = 2.0 / 3.0;

  double alpha(double delta) const;
  /// Errors: InvalidRule.
  void validate() const;
  bool operator==(const NoiseRule&) const = default;
};

struct NoiseResult {
  std::vector<SweepRecord> records;
  std::vector<Solution> solutions;
  std::vector<Check> checks;
  /// Largest delta of the list below which every point has no active constraint.
  std::optional<double> delta0;
};

/// Solve with y_delta at the given alpha; record errors against u_bar and y_d.
std::pair<SweepRecord, Solution> noise_point(const ManufacturedInstance& instance, double delta,
                                             double alpha, std::uint64_t seed,
                                             const ExperimentOptions& options = {});

NoiseResult noise_study(const ManufacturedInstance& instance, const std::vector<double>& deltas,
                        const NoiseRule& rule, std::uint64_t seed,
                        const ExperimentOptions& options = {});

struct LavrentievResult {
  std::vector<SweepRecord> records;
  std::vector<Solution> solutions;  // per lambda
  Solution reference;               // lambda = 0
  SlaterInfo slater{0.0, 0.0};
  double c_fit = 0.0;               // max over records of err * alpha / lambda
  double c_min = kInfinity;         // min over records with err above the noise floor
  std::optional<double> lambda_coincide;
  std::vector<Check> checks;
};

/// Errors: LambdaExceedsSlaterCap (plus sign), NotASlaterPoint, InfeasibleProblem.
LavrentievResult lavrentiev_sweep(const AdmissibleSet& set, const GridFunction& y_d, double alpha,
                                  const std::vector<double>& lambdas, LavrentievSign sign,
                                  const GridFunction& u_hat, const ExperimentOptions& options = {});

struct TotalErrorResult {
  std::vector<SweepRecord> records;  // err_u = ||u_bar - u_alpha^lambda||
  std::vector<Solution> solutions;
  std::vector<double> tikhonov_error;    // ||u_bar - u_alpha^0||
  std::vector<double> lavrentiev_error;  // ||u_alpha^0 - u_alpha^lambda||
  std::optional<RateFit> fit;
  std::vector<Check> checks;
};

/// lambda = min(lambda_cap, alpha) per alpha.
TotalErrorResult total_error_study(const ManufacturedInstance& instance,
                                   const std::vector<double>& alphas, double lambda_cap,
                                   LavrentievSign sign, const ExperimentOptions& options = {});

struct ContinuityResult {
  std::vector<std::pair<double, double>> pairs;
  std::vector<double> distance;  // ||u_beta - u_alpha||
  std::vector<double> bound;     // |alpha - beta| / beta ||u_alpha|| + 20 tol
  std::vector<bool> passed;
  std::vector<Solution> solutions;  // alpha and beta solutions, interleaved
};

ContinuityResult alpha_continuity_check(const RegularizedProblem& problem,
                                        const std::vector<std::pair<double, double>>& pairs,
                                        const ExperimentOptions& options = {});

/// Column order: alpha, lambda, delta, err_u, err_Su, margin_lo, margin_up,
/// margin_state, n_active_lo, n_active_up, n_active_state, iters, seconds.
void write_sweep_csv(std::ostream& out, const std::vector<SweepRecord>& records);

}  // namespace tlreg
