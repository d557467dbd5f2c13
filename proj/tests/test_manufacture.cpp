#include <cmath>
#include <memory>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "random_instance.hpp"
#include "tlreg/errors.hpp"
#include "tlreg/manufacture.hpp"

namespace tlreg {
namespace {

TEST(LinearGenerator, FrozenSequence) {
  LinearGenerator zero(0);
  EXPECT_DOUBLE_EQ(zero.symmetric_uniform(), -0.8435826902434123);
  EXPECT_DOUBLE_EQ(zero.symmetric_uniform(), -0.7966024794064139);
  EXPECT_DOUBLE_EQ(zero.symmetric_uniform(), 0.21064664525046695);
  LinearGenerator other(42);
  EXPECT_DOUBLE_EQ(other.symmetric_uniform(), 0.1364606532878152);
  EXPECT_DOUBLE_EQ(other.symmetric_uniform(), -0.5490731421044974);
}

TEST(Manufacture, ZeroSource) {
  const ManufacturedInstance inst = testing::preset_instance("interior-attainable-poisson-1d");
  const ManufacturedInstance zero = manufacture(GridFunction(inst.set.grid()), inst.set, true);
  EXPECT_EQ(max_abs(zero.u_bar), 0.0);
  EXPECT_EQ(max_abs(zero.y_d), 0.0);
  EXPECT_EQ(zero.residual, 0.0);
}

TEST(Manufacture, InteriorInstanceSatisfiesStrongSource) {
  const ManufacturedInstance inst = testing::preset_instance("interior-attainable-poisson-1d");
  EXPECT_TRUE(inst.interior());
  EXPECT_TRUE(inst.strong_source(1e-12));
  EXPECT_GE(feasibility(inst.u_bar, inst.set).min_margin(), inst.tau);
  EXPECT_LE(inst.residual, 1e-10);
  EXPECT_TRUE(classify_activity(inst.u_bar, inst.set).empty());
}

TEST(Manufacture, LargeSourceIsClipped) {
  const ManufacturedInstance inst = testing::preset_instance("clipped-fredholm-1d");
  EXPECT_FALSE(inst.interior());
  EXPECT_GT(classify_activity(inst.u_bar, inst.set).upper.size(), 0u);
  EXPECT_TRUE(inst.margins.feasible);
}

TEST(Manufacture, VariationalInequalityOfProjection) {
  const ManufacturedInstance inst = testing::preset_instance("clipped-fredholm-1d");
  const GridFunction s_adj_w = apply_adjoint(inst.set.op(), inst.w);
  testing::RandomInstances gen(4);
  for (int k = 0; k < 50; ++k) {
    const GridFunction u = gen.vector(inst.set.grid(), 0.0, 1.0);
    EXPECT_LE(inner(s_adj_w - inst.u_bar, u - inst.u_bar), 1e-8);
  }
}

TEST(Manufacture, NonAttainableResidual) {
  const ManufacturedInstance base = testing::preset_instance("interior-attainable-poisson-1d");
  const ManufacturedInstance inst = manufacture(base.w, base.set, false, 0.01, 3);
  EXPECT_NEAR(inst.residual, 0.01, 1e-12);
  EXPECT_FALSE(inst.attainable);
}

TEST(Manufacture, RequiresLambdaZero) {
  const ManufacturedInstance base = testing::preset_instance("interior-attainable-poisson-1d");
  EXPECT_THROW(manufacture(base.w, base.set.with_lambda(0.1), true), Error);
}

TEST(Manufacture, JsonRoundTrip) {
  const ManufacturedInstance inst = testing::preset_instance("clipped-fredholm-1d");
  const ManufacturedInstance back = instance_from_json(to_json(inst), inst.set);
  EXPECT_EQ(back.u_bar.values(), inst.u_bar.values());
  EXPECT_EQ(back.w.values(), inst.w.values());
  EXPECT_EQ(back.y_d.values(), inst.y_d.values());
  EXPECT_EQ(back.tau, inst.tau);
  EXPECT_EQ(back.margins.state_margin, inst.margins.state_margin);
  EXPECT_EQ(to_json(back), to_json(inst));
}

TEST(AddNoise, ExactLevelAndDeterminism) {
  const DomainGrid g(1, 40);
  const GridFunction y = GridFunction::constant(g, 0.3);
  EXPECT_EQ(add_noise(y, 0.0, 9).y_delta.values(), y.values());
  for (double delta : {1e-2, 1e-4, 1.0}) {
    const NoisyData a = add_noise(y, delta, 9);
    EXPECT_NEAR(norm(a.y_delta - y), delta, 1e-12);
    EXPECT_EQ(add_noise(y, delta, 9).y_delta.values(), a.y_delta.values());
    EXPECT_NE(add_noise(y, delta, 10).y_delta.values(), a.y_delta.values());
  }
  EXPECT_THROW(add_noise(y, -1.0, 1), Error);
}

TEST(RecoverSource, CertificateVanishesOnInteriorInstance) {
  const ManufacturedInstance inst = testing::preset_instance("interior-attainable-poisson-1d");
  std::vector<PathPoint> path;
  for (double alpha : {1e-2, 1e-3, 1e-4, 1e-5, 1e-6}) {
    path.push_back({alpha, solve(RegularizedProblem(inst.set, inst.y_d, alpha))});
  }
  const SourceRecovery r = recover_source(path, inst.y_d, inst.set);
  EXPECT_LE(r.certificate, 1e-4);
  ASSERT_EQ(r.discrepancy_ratio.size(), 5u);
  for (double ratio : r.discrepancy_ratio) EXPECT_LE(ratio, 2 * inst.w_norm + 1e-6);
  EXPECT_TRUE(std::isfinite(r.w_drift));
  // The recovered element reproduces u_alpha through the projection formula.
  EXPECT_LE(norm(project_admissible(apply_adjoint(inst.set.op(), r.w_est), inst.set) - path.back().solution.u), 1e-4);
}

TEST(RecoverSource, SinglePointMakesNoConvergenceClaim) {
  const ManufacturedInstance inst = testing::preset_instance("interior-attainable-poisson-1d");
  const std::vector<PathPoint> path{{10.0, solve(RegularizedProblem(inst.set, inst.y_d, 10.0))}};
  const SourceRecovery r = recover_source(path, inst.y_d, inst.set);
  EXPECT_EQ(r.w_drift, kInfinity);
  EXPECT_GT(norm(r.w_est - inst.w), 0.5 * inst.w_norm);
  try {
    recover_source({}, inst.y_d, inst.set);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kEmptyPath);
  }
}

TEST(RecoverSource, ExactSourceProjectsToSolution) {
  const ManufacturedInstance inst = testing::preset_instance("clipped-fredholm-1d");
  EXPECT_LE(norm(project_admissible(apply_adjoint(inst.set.op(), inst.w), inst.set) - inst.u_bar), 1e-8);
}

TEST(OptimalAlpha, Examples) {
  const OptimalAlpha zero = optimal_alpha(0.0, 3.0);
  EXPECT_EQ(zero.alpha, 0.0);
  EXPECT_TRUE(zero.attainable);
  EXPECT_DOUBLE_EQ(optimal_alpha(0.01, 2.0).alpha, 0.005);
  try {
    optimal_alpha(0.1, 0.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kZeroSourceNorm);
  }
}

TEST(OptimalAlpha, MinimizesTheBoundOnAGrid) {
  const double residual = 0.01, w_norm = 2.0;
  const double star = optimal_alpha(residual, w_norm).alpha;
  std::vector<double> grid;
  for (int k = 0; k <= 40; ++k) grid.push_back(std::pow(10.0, -5.0 + 0.1 * k));
  const auto bound = [&](double a) { return std::sqrt(a) * w_norm + residual / std::sqrt(a); };
  size_t best = 0, nearest = 0;
  for (size_t k = 0; k < grid.size(); ++k) {
    if (bound(grid[k]) < bound(grid[best])) best = k;
    if (std::abs(std::log(grid[k] / star)) < std::abs(std::log(grid[nearest] / star))) nearest = k;
  }
  EXPECT_EQ(best, nearest);
}

TEST(Manufacture, AttainableResidualBound) {
  const ManufacturedInstance inst = testing::preset_instance("clipped-fredholm-1d");
  for (double alpha : {1e-1, 1e-2, 1e-3}) {
    const Solution s = solve(RegularizedProblem(inst.set, inst.y_d, alpha));
    EXPECT_LE(norm(s.y - inst.y_d), 2 * alpha * inst.w_norm + 1e-7);
  }
}

}  // namespace
}  // namespace tlreg
