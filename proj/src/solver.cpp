#include "tlreg/solver.hpp"

#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "tlreg/errors.hpp"

namespace tlreg {

RegularizedProblem::RegularizedProblem(AdmissibleSet set_, GridFunction y_d_, double alpha_)
    : set(std::move(set_)), y_d(std::move(y_d_)), alpha(alpha_) {
  require_same_grid(set.grid(), y_d.grid(), "regularized problem");
}

double RegularizedProblem::objective(const GridFunction& u) const {
  const GridFunction r = apply(op(), u) - y_d;
  return inner(r, r) + alpha * inner(u, u);
}

QuadraticModel RegularizedProblem::model() const {
  QuadraticModel m;
  m.gram_weight = 2.0;
  m.shift = 2.0 * alpha;
  m.linear = 2.0 * op().apply_adjoint(y_d.values());
  return m;
}

namespace {

Solution to_solution(const RegularizedProblem& problem, QpResult&& result) {
  const DomainGrid& grid = problem.set.grid();
  GridFunction u(grid, std::move(result.u));
  GridFunction y = apply(problem.op(), u);
  Solution s{u,
             y,
             problem.objective(u),
             GridFunction(grid, std::move(result.lower_multiplier)),
             GridFunction(grid, std::move(result.upper_multiplier)),
             std::move(result.state_multiplier),
             std::move(result.pattern),
             result.iterations,
             result.kkt};
  return s;
}

}  // namespace

GridFunction solve_unconstrained(const AssembledOperator& op, const GridFunction& y_d,
                                 double alpha) {
  require_same_grid(op.grid(), y_d.grid(), "solve_unconstrained");
  if (!(alpha > 0.0)) throw Error(ErrorKind::kAlphaNonPositive, "alpha must be positive");
  const Eigen::MatrixXd& gram = op.gram();  // GridTooLarge for factorized operators
  Eigen::MatrixXd h = gram;
  h.diagonal().array() += alpha;
  // S*S is self-adjoint in the weighted product; with uniform weights it is symmetric.
  h = 0.5 * (h + h.transpose()).eval();
  const Eigen::VectorXd rhs = op.apply_adjoint(y_d.values());
  Eigen::LDLT<Eigen::MatrixXd> ldlt(h);
  Eigen::VectorXd u = ldlt.solve(rhs);
  // One step of iterative refinement keeps the relative residual near round-off.
  u += ldlt.solve(rhs - h * u);
  return GridFunction(op.grid(), std::move(u));
}

Solution solve(const RegularizedProblem& problem, double tol,
               const std::optional<GridFunction>& initial) {
  if (!(problem.alpha > 0.0)) {
    throw Error(ErrorKind::kAlphaNonPositive,
                "alpha must be positive, got " + std::to_string(problem.alpha));
  }
  std::optional<Eigen::VectorXd> start;
  if (initial) {
    require_same_grid(initial->grid(), problem.set.grid(), "solve (initial point)");
    start = initial->values();
  } else if (problem.op().has_dense()) {
    start = project_box(solve_unconstrained(problem.op(), problem.y_d, problem.alpha),
                        problem.set.box())
                .values();
  }
  QpOptions options;
  options.tol = tol;
  try {
    return to_solution(problem, minimize_quadratic(problem.model(), problem.set, options, start));
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::kInfeasibleSet) {
      throw Error(ErrorKind::kInfeasibleProblem, e.what());
    }
    throw;
  }
}

double projection_formula_residual(const Solution& solution, const RegularizedProblem& problem,
                                   double tol) {
  GridFunction v = apply_adjoint(problem.op(), solution.y - problem.y_d);
  v *= -1.0 / problem.alpha;
  const GridFunction p = project_admissible(v, problem.set, tol);
  return norm(solution.u - p);
}

PseudoInverseResult pseudo_inverse(const AssembledOperator& op, const GridFunction& y_d,
                                   const AdmissibleSet& set, double tol) {
  require_same_grid(op.grid(), y_d.grid(), "pseudo_inverse");
  require_same_grid(op.grid(), set.grid(), "pseudo_inverse");
  const auto residual_sq = [&](const GridFunction& u) {
    const GridFunction r = apply(op, u) - y_d;
    return inner(r, r);
  };

  // Stage one: least squares over the set.
  QuadraticModel ls;
  ls.gram_weight = 2.0;
  ls.shift = 0.0;
  ls.linear = 2.0 * op.apply_adjoint(y_d.values());
  QpOptions options;
  options.tol = tol;
  GridFunction stage_one(set.grid());
  try {
    stage_one = GridFunction(set.grid(), minimize_quadratic(ls, set, options).u);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::kInfeasibleSet) throw Error(ErrorKind::kInfeasibleProblem, e.what());
    throw;
  }
  const double m_star = residual_sq(stage_one);

  PseudoInverseResult out{stage_one, std::sqrt(m_star), norm(stage_one), false};
  const Eigen::BDCSVD<Eigen::MatrixXd> svd(op.dense());
  const auto& sv = svd.singularValues();
  out.injective = sv.size() > 0 && sv.minCoeff() > 1e-10 * sv.maxCoeff();
  if (out.injective) return out;

  // Stage two: min ||u||^2 s.t. ||Su - y||^2 <= m* + tol. Its Lagrangian is the
  // Tikhonov functional with weight alpha = 1/multiplier, and the residual of the
  // Tikhonov minimizer grows monotonically with alpha.
  const double target = m_star + tol;
  const auto tikhonov = [&](double alpha) {
    return solve(RegularizedProblem(set, y_d, alpha), tol).u;
  };
  const double top = std::max(1.0, op.gram().diagonal().cwiseAbs().maxCoeff());
  double hi = 1e2 * top;
  GridFunction u_hi = tikhonov(hi);
  if (residual_sq(u_hi) <= target) {
    out.u = u_hi;
  } else {
    double lo = hi;
    GridFunction u_lo = u_hi;
    while (residual_sq(u_lo) > target) {
      hi = lo;
      lo *= 0.1;
      if (lo < 1e-16) {
        throw Error(ErrorKind::kNonConvergence,
                    "no Tikhonov weight reaches the minimal residual within tolerance");
      }
      u_lo = tikhonov(lo);
    }
    for (int k = 0; k < 40 && hi / lo > 1.0 + 1e-6; ++k) {
      const double mid = std::sqrt(lo * hi);
      GridFunction u_mid = tikhonov(mid);
      if (residual_sq(u_mid) <= target) {
        lo = mid;
        u_lo = std::move(u_mid);
      } else {
        hi = mid;
      }
    }
    out.u = u_lo;
  }
  out.residual_norm = std::sqrt(residual_sq(out.u));
  out.norm = norm(out.u);
  return out;
}

}  // namespace tlreg
