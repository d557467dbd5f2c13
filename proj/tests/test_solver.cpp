#include <cmath>
#include <memory>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "random_instance.hpp"
#include "tlreg/errors.hpp"
#include "tlreg/solver.hpp"

namespace tlreg {
namespace {

using OpPtr = std::shared_ptr<const AssembledOperator>;

AdmissibleSet make_set(const OpPtr& op, double b, double psi, const ObservationRegion& region,
                       double lambda = 0.0, LavrentievSign sign = LavrentievSign::kPlus) {
  return AdmissibleSet(op, BoxBounds(GridFunction::constant(op->grid(), b)),
                       StateConstraint(region, Eigen::VectorXd::Constant(region.size(), psi), lambda, sign));
}

void expect_certified(const Solution& s, const RegularizedProblem& p, double tol) {
  EXPECT_LE(s.kkt.max(), tol);
  EXPECT_GE(s.lower_multiplier.values().minCoeff(), -tol);
  EXPECT_GE(s.upper_multiplier.values().minCoeff(), -tol);
  if (s.state_multiplier.size()) {
    EXPECT_GE(s.state_multiplier.minCoeff(), -tol);
  }
  EXPECT_LE(projection_formula_residual(s, p), 10 * tol);
}

TEST(Solve, ZeroDataGivesZero) {
  const OpPtr op = std::make_shared<const AssembledOperator>(assemble_poisson(DomainGrid(1, 32)));
  const RegularizedProblem p(make_set(op, 1.0, 0.0, ObservationRegion::all(op->grid())),
                             GridFunction(op->grid()), 1e-3);
  const Solution s = solve(p);
  EXPECT_EQ(max_abs(s.u), 0.0);
  EXPECT_EQ(s.objective, 0.0);
  EXPECT_EQ(projection_formula_residual(s, p), 0.0);
}

TEST(Solve, InteriorUnconstrainedMinimizer) {
  const OpPtr op = std::make_shared<const AssembledOperator>(
      assemble_fredholm(DomainGrid(1, 40), KernelSpec::gaussian(0.2)));
  const GridFunction target = GridFunction::sample(op->grid(), [](const Point& x) {
    return 0.5 + 0.2 * std::sin(2 * M_PI * x[0]);
  });
  const GridFunction y_d = apply(*op, target);
  const double alpha = 1e-3;
  const GridFunction free = solve_unconstrained(*op, y_d, alpha);
  const AdmissibleSet set = make_set(op, 1.0, 10.0, ObservationRegion::all(op->grid()));
  ASSERT_GT(feasibility(free, set).min_margin(), 1e-3);
  const RegularizedProblem p(set, y_d, alpha);
  const Solution s = solve(p);
  EXPECT_LE(norm(s.u - free), 10 * 1e-8);
  EXPECT_TRUE(s.active.empty());
  expect_certified(s, p, 1e-8);
}

TEST(Solve, UpperBoundActivityMatchesOracle) {
  const OpPtr op = std::make_shared<const AssembledOperator>(
      assemble_fredholm(DomainGrid(1, 8), KernelSpec::gaussian(0.3)));
  const GridFunction y_d = apply(*op, GridFunction::constant(op->grid(), 2.0));
  const RegularizedProblem p(make_set(op, 1.0, kInfinity, ObservationRegion::all(op->grid())), y_d, 1e-2);
  const Solution s = solve(p);
  const Solution o = oracle_solve(p);
  EXPECT_LE(norm(s.u - o.u), 1e-8);
  EXPECT_FALSE(o.active.upper.empty());
  EXPECT_EQ(classify_activity(s.u, p.set), classify_activity(o.u, p.set));
  expect_certified(s, p, 1e-8);
}

TEST(Solve, RandomInstancesMatchOracle) {
  testing::RandomInstances gen(31337);
  for (int k = 0; k < 60; ++k) {
    const RegularizedProblem p = gen.problem();
    const Solution s = solve(p);
    const Solution o = oracle_solve(p, 1e-10);
    EXPECT_LE(norm(s.u - o.u), 1e-8) << "instance " << k;
    EXPECT_EQ(classify_activity(s.u, p.set), classify_activity(o.u, p.set)) << "instance " << k;
    expect_certified(s, p, 1e-8);
  }
}

TEST(Solve, BindingStateHasPositiveMultiplier) {
  const OpPtr op = std::make_shared<const AssembledOperator>(assemble_poisson(DomainGrid(1, 7)));
  const auto region = ObservationRegion::nodes(op->grid(), {3});
  const GridFunction y_d = GridFunction::constant(op->grid(), 0.2);
  const RegularizedProblem p(make_set(op, 10.0, 0.02, region), y_d, 1e-4);
  const Solution o = oracle_solve(p);
  ASSERT_EQ(o.active.state, std::vector<Index>{3});
  EXPECT_GT(o.state_multiplier[0], 0.0);
  const Solution s = solve(p);
  EXPECT_LE(norm(s.u - o.u), 1e-8);
  EXPECT_NEAR(s.state_multiplier[0], o.state_multiplier[0], 1e-6 * (1 + o.state_multiplier[0]));
}

TEST(Solve, IndependentOfStartingPoint) {
  const OpPtr op = std::make_shared<const AssembledOperator>(assemble_poisson(DomainGrid(1, 48)));
  const auto region = ObservationRegion::box(op->grid(), {0.3, 0}, {0.7, 0}, true);
  const RegularizedProblem p(make_set(op, 1.0, 0.02, region, 0.01),
                             GridFunction::constant(op->grid(), 0.1), 1e-3);
  const Solution a = solve(p);
  const Solution b = solve(p, 1e-8, GridFunction::constant(op->grid(), 0.9));
  EXPECT_LE(norm(a.u - b.u), 100 * 1e-8);
  EXPECT_FALSE(a.active.state.empty());
}

TEST(Solve, ObjectiveBelowRandomFeasiblePoints) {
  const OpPtr op = std::make_shared<const AssembledOperator>(
      assemble_fredholm(DomainGrid(1, 30), KernelSpec::gaussian(0.2)));
  const auto region = ObservationRegion::box(op->grid(), {0.2, 0}, {0.8, 0}, true);
  const RegularizedProblem p(make_set(op, 1.0, 0.2, region, 0.05),
                             GridFunction::constant(op->grid(), 0.4), 1e-2);
  const Solution s = solve(p);
  testing::RandomInstances gen(8);
  int checked = 0;
  while (checked < 100) {
    const GridFunction u = gen.vector(op->grid(), 0.0, 1.0);
    if (!feasibility(u, p.set).feasible) continue;
    ++checked;
    EXPECT_LE(s.objective, p.objective(u) + 1e-12);
  }
}

TEST(Solve, PlusSignSolutionFeasibleForUnregularizedSet) {
  const OpPtr op = std::make_shared<const AssembledOperator>(assemble_poisson(DomainGrid(1, 40)));
  const auto region = ObservationRegion::box(op->grid(), {0.25, 0}, {0.75, 0}, true);
  const AdmissibleSet set = make_set(op, 1.0, 0.01, region);
  for (double lambda : {1e-3, 1e-2, 1e-1}) {
    const Solution s = solve(RegularizedProblem(set.with_lambda(lambda), GridFunction::constant(op->grid(), 0.1), 1e-3));
    EXPECT_TRUE(feasibility(s.u, set).feasible);
  }
}

TEST(Solve, Errors) {
  const OpPtr op = std::make_shared<const AssembledOperator>(assemble_poisson(DomainGrid(1, 10)));
  const AdmissibleSet ok = make_set(op, 1.0, 0.1, ObservationRegion::all(op->grid()));
  for (double alpha : {0.0, -1.0}) {
    try {
      solve(RegularizedProblem(ok, GridFunction(op->grid()), alpha));
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::kAlphaNonPositive);
    }
  }
  const AdmissibleSet empty = make_set(op, 1.0, -1.0, ObservationRegion::all(op->grid()));
  try {
    solve(RegularizedProblem(empty, GridFunction(op->grid()), 1e-2));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kInfeasibleProblem);
  }
}

TEST(SolveUnconstrained, Basics) {
  const OpPtr op = std::make_shared<const AssembledOperator>(assemble_poisson(DomainGrid(1, 24)));
  const DomainGrid& g = op->grid();
  EXPECT_EQ(max_abs(solve_unconstrained(*op, GridFunction(g), 1e-2)), 0.0);
  const GridFunction y_d = GridFunction::constant(g, 1.0);
  for (double alpha : {1e2, 1e4}) {
    EXPECT_LE(norm(solve_unconstrained(*op, y_d, alpha)), norm(apply_adjoint(*op, y_d)) / alpha);
  }
  const GridFunction v = GridFunction::sample(g, [](const Point& x) { return std::sin(3 * x[0]); });
  const GridFunction yv = apply(*op, v);
  double previous = kInfinity;
  for (double alpha : {1e-4, 1e-6, 1e-8, 1e-10}) {
    const double err = norm(solve_unconstrained(*op, yv, alpha) - v);
    EXPECT_LT(err, previous);
    previous = err;
  }
  EXPECT_LT(previous, 1e-3);
}

TEST(ProjectionFormula, DetectsPerturbation) {
  const OpPtr op = std::make_shared<const AssembledOperator>(assemble_poisson(DomainGrid(1, 31)));
  const auto region = ObservationRegion::box(op->grid(), {0.25, 0}, {0.75, 0}, true);
  const RegularizedProblem p(make_set(op, 1.0, 0.05, region),
                             apply(*op, GridFunction::constant(op->grid(), 0.4)), 1e-3);
  Solution s = solve(p);
  EXPECT_LE(projection_formula_residual(s, p), 1e-7);
  // Perturb one interior free node well away from both bounds.
  Index node = -1;
  for (Index i = 5; i < s.u.size(); ++i) {
    if (s.u[i] > 0.15 && s.u[i] < 0.85) {
      node = i;
      break;
    }
  }
  ASSERT_GE(node, 0);
  s.u[node] += 0.1;
  s.y = apply(*op, s.u);
  EXPECT_GE(projection_formula_residual(s, p), 0.09 * std::sqrt(op->grid().weight(node)));
}

TEST(PseudoInverse, InjectiveOperatorGivesStageOneMinimizer) {
  const OpPtr op = std::make_shared<const AssembledOperator>(assemble_poisson(DomainGrid(1, 20)));
  const AdmissibleSet set = make_set(op, 1.0, kInfinity, ObservationRegion::all(op->grid()));
  const GridFunction u_bar = GridFunction::sample(op->grid(), [](const Point& x) { return 0.3 + 0.5 * x[0]; });
  const PseudoInverseResult r = pseudo_inverse(*op, apply(*op, u_bar), set);
  EXPECT_TRUE(r.injective);
  EXPECT_LE(norm(r.u - u_bar), 1e-6);
  EXPECT_LE(r.residual_norm, 1e-8);
}

TEST(PseudoInverse, RankOneMinimalNorm) {
  // S u = x <x, u>: every u >= 0 with <x, u> = c attains zero residual, and the
  // minimal-norm one is c x / ||x||^2, which is itself nonnegative.
  const OpPtr op = std::make_shared<const AssembledOperator>(
      assemble_fredholm(DomainGrid(1, 16), KernelSpec::separable()));
  const DomainGrid& g = op->grid();
  const AdmissibleSet set = make_set(op, kInfinity, kInfinity, ObservationRegion::all(g));
  const GridFunction x = GridFunction::sample(g, [](const Point& p) { return p[0]; });
  const double c = 0.7;
  const PseudoInverseResult r = pseudo_inverse(*op, c * x, set, 1e-12);
  EXPECT_FALSE(r.injective);
  const GridFunction expected = (c / inner(x, x)) * x;
  EXPECT_LE(norm(r.u - expected), 1e-5);
  EXPECT_LE(r.residual_norm, 1e-5);
  EXPECT_NEAR(r.norm, norm(expected), 1e-5);
}

TEST(Oracle, LimitsAndInfeasibility) {
  const OpPtr big = std::make_shared<const AssembledOperator>(assemble_poisson(DomainGrid(1, 11)));
  try {
    oracle_solve(RegularizedProblem(make_set(big, 1, 1, ObservationRegion::all(big->grid())), GridFunction(big->grid()), 1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kOracleTooLarge);
  }
  const OpPtr op = std::make_shared<const AssembledOperator>(assemble_poisson(DomainGrid(1, 4)));
  const RegularizedProblem zero(make_set(op, 1, 0.1, ObservationRegion::all(op->grid())), GridFunction(op->grid()), 1);
  const Solution o = oracle_solve(zero);
  EXPECT_EQ(max_abs(o.u), 0.0);
  EXPECT_TRUE(o.active.upper.empty() && o.active.state.empty());
  try {
    oracle_solve(RegularizedProblem(make_set(op, 1, -1, ObservationRegion::all(op->grid())), GridFunction(op->grid()), 1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kNoFeasiblePattern);
  }
}

}  // namespace
}  // namespace tlreg
