#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "tlreg/errors.hpp"
#include "tlreg/experiments.hpp"

namespace tlreg {
namespace {

std::vector<double> half_decades(int from, int to) {
  std::vector<double> out;
  for (int k = 2 * from; k <= 2 * to; ++k) out.push_back(std::pow(10.0, -k / 2.0));
  return out;
}

const ManufacturedInstance& interior() {
  static const ManufacturedInstance inst = testing::preset_instance("interior-attainable-poisson-1d");
  return inst;
}

TEST(FitRate, RecoversSyntheticSlope) {
  std::vector<SweepRecord> records;
  for (double a : half_decades(1, 5)) {
    SweepRecord r;
    r.alpha = a;
    r.err_u = 3.0 * std::sqrt(a);
    records.push_back(r);
  }
  const auto fit = fit_rate(records, 0.0);
  ASSERT_TRUE(fit);
  EXPECT_NEAR(fit->slope, 0.5, 1e-12);
  EXPECT_NEAR(std::exp(fit->intercept), 3.0, 1e-10);
  EXPECT_EQ(fit->points, 9);
  EXPECT_FALSE(fit_rate(records, 3.0 * std::sqrt(1e-2)).has_value());
  const auto window = fit_rate(records, 0.0, 1e-4, 1e-2);
  ASSERT_TRUE(window);
  EXPECT_EQ(window->points, 5);
}

TEST(SweepAlpha, InteriorInstanceRateAndBounds) {
  const SweepResult r = sweep_alpha(interior(), half_decades(1, 5));
  EXPECT_TRUE(all_passed(r.checks));
  ASSERT_TRUE(r.fit);
  EXPECT_GE(r.fit->slope, 0.45);
  EXPECT_LE(r.fit->slope, 0.55);
  for (size_t k = 1; k < r.records.size(); ++k) {
    EXPECT_LE(r.records[k].err_u, r.records[k - 1].err_u + 1e-7);
  }
}

TEST(SweepAlpha, HugeAlphaGivesZero) {
  const SweepResult r = sweep_alpha(interior(), {1e8, 1e7, 1e6, 1e5});
  EXPECT_LE(max_abs(r.solutions[0].u), 1e-6);
  EXPECT_NEAR(r.records[0].err_u, norm(interior().u_bar), 1e-6);
}

TEST(SweepAlpha, RejectsBadLists) {
  EXPECT_THROW(sweep_alpha(interior(), {1e-1, 1e-2, 1e-3}), Error);
  EXPECT_THROW(sweep_alpha(interior(), {1e-1, 1e-2, 1e-3, 1e-2}), Error);
  EXPECT_THROW(sweep_alpha(interior(), {1e-1, 1e-2, 1e-3, -1.0}), Error);
}

TEST(Activity, InteriorInstanceHasThreshold) {
  const ActivityResult r = activity_transition(interior(), half_decades(1, 5), interior().tau);
  EXPECT_FALSE(r.never_active);
  EXPECT_TRUE(std::isfinite(r.alpha0));
  for (size_t k = 0; k < r.records.size(); ++k) {
    if (r.records[k].alpha <= r.alpha0) {
      EXPECT_TRUE(r.inactive[k]);
      EXPECT_GT(r.records[k].margin_lo, interior().tau / 2);
      EXPECT_GT(r.records[k].margin_state, interior().tau / 2);
    }
  }
}

TEST(Activity, ClippedInstanceNeverSettles) {
  const ManufacturedInstance inst = testing::preset_instance("clipped-fredholm-1d");
  try {
    activity_transition(inst, half_decades(1, 5), inst.tau);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kNoTransition);
  }
}

TEST(Noise, RuleValidation) {
  for (double s : {1.0, 0.0, 1.5}) {
    try {
      NoiseRule{1.0, s}.validate();
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::kInvalidRule);
    }
  }
  EXPECT_NO_THROW(NoiseRule{}.validate());
  EXPECT_DOUBLE_EQ(NoiseRule{}.alpha(1e-3), std::pow(1e-3, 2.0 / 3.0));
}

TEST(Noise, ZeroNoiseMatchesSweepPoint) {
  const auto [record, solution] = noise_point(interior(), 0.0, 1e-3, 5);
  const Solution direct = solve(RegularizedProblem(interior().set, interior().y_d, 1e-3));
  EXPECT_LE(norm(solution.u - direct.u), 1e-12);
  EXPECT_EQ(record.delta, 0.0);
}

TEST(Noise, StudyOnInteriorInstance) {
  const NoiseResult r = noise_study(interior(), {1e-2, 1e-3, 1e-4}, NoiseRule{}, 11);
  EXPECT_TRUE(all_passed(r.checks));
  ASSERT_TRUE(r.delta0);
  EXPECT_EQ(r.records.back().n_active_lo + r.records.back().n_active_up + r.records.back().n_active_state, 0);
}

TEST(Lavrentiev, ZeroLambdaAndCoincidence) {
  std::vector<double> lambdas{0.0};
  for (int k = 1; k <= 6; ++k) lambdas.push_back(std::pow(10.0, -k));
  const LavrentievResult r = lavrentiev_sweep(interior().set, interior().y_d, 1e-3, lambdas,
                                              LavrentievSign::kPlus, GridFunction(interior().set.grid()));
  EXPECT_EQ(r.records[0].err_u, 0.0);
  ASSERT_TRUE(r.lambda_coincide);
  EXPECT_GT(*r.lambda_coincide, 0.0);
  EXPECT_TRUE(all_passed(r.checks));
}

TEST(Lavrentiev, BindingStateConstantIsStable) {
  const RunConfig c = testing::preset("binding-state-poisson-2d");
  const BuiltSetting s = build_setting(c);
  const GridFunction y_d = resolve_function(c.data.y_d, s.set.grid(), "data.y_d");
  const LavrentievResult r = lavrentiev_sweep(s.set, y_d, 1e-2, {1e-2, 1e-3, 1e-4, 1e-5},
                                              LavrentievSign::kPlus, s.slater_point);
  EXPECT_FALSE(r.reference.active.state.empty());
  EXPECT_TRUE(std::isfinite(r.c_fit));
  EXPECT_LT(r.c_fit / r.c_min, 10.0);
  EXPECT_TRUE(all_passed(r.checks));
}

TEST(Lavrentiev, MinusSignViolationIsBounded) {
  const RunConfig c = testing::preset("binding-state-poisson-2d");
  const BuiltSetting s = build_setting(c);
  const GridFunction y_d = resolve_function(c.data.y_d, s.set.grid(), "data.y_d");
  const LavrentievResult r = lavrentiev_sweep(s.set, y_d, 1e-2, {1e-2, 1e-3},
                                              LavrentievSign::kMinus, s.slater_point);
  EXPECT_TRUE(all_passed(r.checks));
  EXPECT_EQ(r.checks.size(), 3u);
}

TEST(Lavrentiev, CapAndSlaterErrors) {
  const GridFunction u_hat = GridFunction::constant(interior().set.grid(), 0.1);
  const SlaterInfo info = slater(interior().set, u_hat);
  try {
    lavrentiev_sweep(interior().set, interior().y_d, 1e-2, {2 * info.lambda_max}, LavrentievSign::kPlus, u_hat);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kLambdaExceedsSlaterCap);
  }
  EXPECT_NO_THROW(lavrentiev_sweep(interior().set, interior().y_d, 1e-2, {2 * info.lambda_max},
                                   LavrentievSign::kMinus, u_hat));
  try {
    lavrentiev_sweep(interior().set, interior().y_d, 1e-2, {1e-3}, LavrentievSign::kPlus,
                     GridFunction::constant(interior().set.grid(), 1.0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kNotASlaterPoint);
  }
}

TEST(TotalError, RateAndSplit) {
  const TotalErrorResult r = total_error_study(interior(), half_decades(1, 5), 1e-2, LavrentievSign::kPlus);
  EXPECT_TRUE(all_passed(r.checks));
  ASSERT_TRUE(r.fit);
  EXPECT_GE(r.fit->slope, 0.45);
  EXPECT_LE(r.fit->slope, 0.55);
}

TEST(TotalError, ZeroCapDegeneratesToSweep) {
  const auto alphas = half_decades(1, 4);
  const TotalErrorResult t = total_error_study(interior(), alphas, 0.0, LavrentievSign::kPlus);
  const SweepResult s = sweep_alpha(interior(), alphas);
  ASSERT_TRUE(t.fit && s.fit);
  EXPECT_NEAR(t.fit->slope, s.fit->slope, 1e-9);
}

TEST(Continuity, Pairs) {
  const RegularizedProblem p(interior().set, interior().y_d, 1e-2);
  const ContinuityResult r = alpha_continuity_check(p, {{1e-2, 1e-2}, {1e-2, 1.1e-2}, {1e-3, 5e-4}});
  for (bool ok : r.passed) EXPECT_TRUE(ok);
  EXPECT_EQ(r.distance[0], 0.0);
  const RegularizedProblem zero(interior().set, GridFunction(interior().set.grid()), 1e-2);
  const ContinuityResult z = alpha_continuity_check(zero, {{1e-2, 2e-2}});
  EXPECT_EQ(z.distance[0], 0.0);
  EXPECT_TRUE(z.passed[0]);
}

TEST(SweepCsv, FormatAndDeterminism) {
  const SweepResult a = sweep_alpha(interior(), half_decades(1, 3));
  const SweepResult b = sweep_alpha(interior(), half_decades(1, 3));
  std::ostringstream sa, sb;
  write_sweep_csv(sa, a.records);
  write_sweep_csv(sb, b.records);
  EXPECT_EQ(sa.str(), sb.str());
  const std::string text = sa.str();
  EXPECT_EQ(text.substr(0, text.find('\n')),
            "alpha,lambda,delta,err_u,err_Su,margin_lo,margin_up,margin_state,"
            "n_active_lo,n_active_up,n_active_state,iters,seconds");
  EXPECT_EQ(text.find('\r'), std::string::npos);
  EXPECT_NE(text.find("\n0.10000000000000001,0,0,"), std::string::npos);
}

}  // namespace
}  // namespace tlreg
