#pragma once

#include <optional>

#include "tlreg/admissible.hpp"
#include "tlreg/operators.hpp"
#include "tlreg/qp_engine.hpp"

namespace tlreg {

/// min ||S u - y_d||^2 + alpha ||u||^2 over U_ad^lambda.
struct RegularizedProblem {
  RegularizedProblem(AdmissibleSet set, GridFunction y_d, double alpha);

  AdmissibleSet set;
  GridFunction y_d;
  double alpha;

  const AssembledOperator& op() const { return set.op(); }
  double objective(const GridFunction& u) const;
  /// The problem's objective as a QuadraticModel (constant ||y_d||^2 dropped).
  QuadraticModel model() const;
};

struct Solution {
  GridFunction u;
  GridFunction y;  // S u
  double objective = 0.0;
  GridFunction lower_multiplier;  // >= 0 on D
  GridFunction upper_multiplier;  // >= 0 on D
  Eigen::VectorXd state_multiplier;  // >= 0 on D', region order
  ActiveSets active;
  int iterations = 0;
  KktResiduals kkt;
};

struct PseudoInverseResult {
  GridFunction u;
  double residual_norm = 0.0;  // ||S u - y_d||
  double norm = 0.0;           // ||u||
  bool injective = false;      // stage two skipped because the argmin is a singleton
};

/// Unique minimizer of the regularized problem with KKT residuals <= tol.
/// Starts from project_box(solve_unconstrained) unless `initial` is given.
/// Errors: AlphaNonPositive, InfeasibleProblem, NonConvergence.
Solution solve(const RegularizedProblem& problem, double tol = 1e-8,
               const std::optional<GridFunction>& initial = std::nullopt);

/// (S*S + alpha I) u = S* y_d by a dense symmetric solve.
GridFunction solve_unconstrained(const AssembledOperator& op, const GridFunction& y_d,
                                 double alpha);

/// || u - P_{U_ad^lambda}(-S*(S u - y_d) / alpha) ||; zero exactly at the solution.
double projection_formula_residual(const Solution& solution, const RegularizedProblem& problem,
                                   double tol = 1e-10);

/// Minimal-norm minimizer of ||S u - y_d||^2 over the set, in two stages: the
/// minimal residual m*, then min ||u|| subject to ||S u - y_d||^2 <= m* + tol.
/// Stage two is solved through its Lagrangian dual, which is a Tikhonov problem
/// whose weight is found by bisection.
PseudoInverseResult pseudo_inverse(const AssembledOperator& op, const GridFunction& y_d,
                                   const AdmissibleSet& set, double tol = 1e-8);

/// Exhaustive activity enumeration for grids with at most kOracleMaxNodes nodes.
/// Errors: OracleTooLarge, NoFeasiblePattern.
inline constexpr Index kOracleMaxNodes = 10;
Solution oracle_solve(const RegularizedProblem& problem, double tol = 1e-8);

}  // namespace tlreg
