#pragma once

#include <optional>

#include <Eigen/Core>

#include "tlreg/admissible.hpp"

namespace tlreg {

/// q(u) = 1/2 gram_weight ||S u||^2 + 1/2 shift ||u||^2 - <linear, u>, all in the
/// weighted inner product, so that grad q = gram_weight S*S u + shift u - linear.
///
/// The regularized objective ||Su - y||^2 + alpha ||u||^2 is (gram 2, shift 2 alpha,
/// linear 2 S* y) up to a constant; the L2 projection onto a set of v is (0, 2, 2 v).
struct QuadraticModel {
  double gram_weight = 0.0;
  double shift = 0.0;
  Eigen::VectorXd linear;
};

/// Optimality defects of a candidate primal-dual point.
struct KktResiduals {
  double stationarity = 0.0;     // weighted L2 norm of the Lagrangian gradient
  double primal = 0.0;           // largest constraint violation
  double dual = 0.0;             // largest negative multiplier entry
  double complementarity = 0.0;  // largest |multiplier * margin|

  double max() const;
};

struct QpOptions {
  double tol = 1e-8;
  int max_outer = 60;      // augmented Lagrangian updates per round
  int max_inner = 20000;   // projected-gradient steps per subproblem
  int max_rounds = 8;      // AL + refinement rounds before giving up
  int max_refinement = 60; // active-set iterations per refinement
};

struct QpResult {
  Eigen::VectorXd u;
  Eigen::VectorXd lower_multiplier;
  Eigen::VectorXd upper_multiplier;
  Eigen::VectorXd state_multiplier;  // region order
  ActiveSets pattern;                // constraints enforced as equalities
  KktResiduals kkt;
  int iterations = 0;
};

/// Minimize a convex quadratic model over an admissible set.
///
/// An augmented Lagrangian loop handles the state constraint; each subproblem is
/// a box-constrained minimization solved by accelerated projected gradient with
/// adaptive restart. The resulting active-set guess is then refined by a
/// primal-dual active set iteration on the exact KKT system (dense operators
/// only), which certifies the point to round-off.
///
/// Throws InfeasibleSet when no feasible point can be found and NonConvergence
/// when the KKT residuals cannot be driven below options.tol.
QpResult minimize_quadratic(const QuadraticModel& model, const AdmissibleSet& set,
                            const QpOptions& options,
                            const std::optional<Eigen::VectorXd>& warm_start = std::nullopt);

/// KKT residuals of (u, multipliers) for `model` over `set`.
KktResiduals evaluate_kkt(const QuadraticModel& model, const AdmissibleSet& set,
                          const Eigen::VectorXd& u, const Eigen::VectorXd& lower_multiplier,
                          const Eigen::VectorXd& upper_multiplier,
                          const Eigen::VectorXd& state_multiplier);

}  // namespace tlreg
