#include "tlreg/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <string>

#include "tlreg/errors.hpp"

namespace tlreg {

namespace {

using Clock = std::chrono::steady_clock;

std::string fmt_num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

SweepRecord make_record(double alpha, double lambda, double delta, const Solution& sol,
                        const AdmissibleSet& set, const GridFunction& reference,
                        const GridFunction& y_d, double seconds) {
  SweepRecord r;
  r.alpha = alpha;
  r.lambda = lambda;
  r.delta = delta;
  r.err_u = norm(sol.u - reference);
  r.err_Su = norm(sol.y - y_d);
  const FeasibilityReport margins = feasibility(sol.u, set);
  r.margin_lo = margins.lower_margin;
  r.margin_up = margins.upper_margin;
  r.margin_state = margins.state_margin;
  const ActiveSets active = classify_activity(sol.u, set);
  r.n_active_lo = static_cast<Index>(active.lower.size());
  r.n_active_up = static_cast<Index>(active.upper.size());
  r.n_active_state = static_cast<Index>(active.state.size());
  r.iterations = sol.iterations;
  r.seconds = seconds;
  return r;
}

class Stopwatch {
 public:
  explicit Stopwatch(bool enabled) : enabled_(enabled), start_(Clock::now()) {}
  double seconds() const {
    if (!enabled_) return 0.0;
    return std::chrono::duration<double>(Clock::now() - start_).count();
  }

 private:
  bool enabled_;
  Clock::time_point start_;
};

void require_alphas(const std::vector<double>& alphas, std::size_t minimum) {
  if (alphas.size() < minimum) {
    throw Error(ErrorKind::kInvalidArgument,
                "need at least " + std::to_string(minimum) + " alpha values");
  }
  for (std::size_t k = 0; k < alphas.size(); ++k) {
    if (!(alphas[k] > 0.0) || !std::isfinite(alphas[k])) {
      throw Error(ErrorKind::kAlphaNonPositive, "alpha values must be positive and finite");
    }
    if (k > 0 && !(alphas[k] < alphas[k - 1])) {
      throw Error(ErrorKind::kInvalidArgument, "alpha values must be strictly descending");
    }
  }
}

bool inactive_point(const SweepRecord& r, double tau) {
  const double half = 0.5 * tau;
  return r.margin_lo > half && r.margin_up > half && r.margin_state > half &&
         r.n_active_lo == 0 && r.n_active_up == 0 && r.n_active_state == 0;
}

}  // namespace

std::optional<RateFit> fit_rate(const std::vector<SweepRecord>& records, double error_floor,
                                double alpha_lo, double alpha_hi) {
  std::vector<double> xs, ys;
  RateFit fit;
  fit.alpha_lo = kInfinity;
  fit.alpha_hi = 0.0;
  for (const auto& r : records) {
    if (r.err_u < error_floor || r.err_u <= 0.0) continue;
    if (r.alpha < alpha_lo * (1.0 - 1e-12) || r.alpha > alpha_hi * (1.0 + 1e-12)) continue;
    xs.push_back(std::log(r.alpha));
    ys.push_back(std::log(r.err_u));
    fit.alpha_lo = std::min(fit.alpha_lo, r.alpha);
    fit.alpha_hi = std::max(fit.alpha_hi, r.alpha);
  }
  if (xs.size() < 4) return std::nullopt;
  const double n = static_cast<double>(xs.size());
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    sxx += (xs[k] - mx) * (xs[k] - mx);
    sxy += (xs[k] - mx) * (ys[k] - my);
  }
  if (sxx == 0.0) return std::nullopt;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss = 0.0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    const double d = ys[k] - (fit.intercept + fit.slope * xs[k]);
    ss += d * d;
  }
  fit.points = static_cast<int>(xs.size());
  fit.residual = std::sqrt(ss / n);
  return fit;
}

bool all_passed(const std::vector<Check>& checks) {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
}

SweepResult sweep_alpha(const ManufacturedInstance& instance, const std::vector<double>& alphas,
                        const ExperimentOptions& options) {
  require_alphas(alphas, 4);
  SweepResult out;
  const double slack = 10.0 * options.tol;
  std::optional<GridFunction> warm;
  for (const double alpha : alphas) {
    const Stopwatch watch(options.record_timing);
    const RegularizedProblem problem(instance.set, instance.y_d, alpha);
    Solution sol = solve(problem, options.tol, warm);
    warm = sol.u;
    SweepRecord rec = make_record(alpha, 0.0, 0.0, sol, instance.set, instance.u_bar,
                                  instance.y_d, watch.seconds());
    const double bound_u =
        std::sqrt(alpha) * instance.w_norm + instance.residual / std::sqrt(alpha) + slack;
    const double bound_su = 2.0 * alpha * instance.w_norm + instance.residual + slack;
    out.checks.push_back({"bound_u[alpha=" + fmt_num(alpha) + "]", rec.err_u <= bound_u,
                          fmt_num(rec.err_u) + " <= " + fmt_num(bound_u)});
    out.checks.push_back({"bound_Su[alpha=" + fmt_num(alpha) + "]", rec.err_Su <= bound_su,
                          fmt_num(rec.err_Su) + " <= " + fmt_num(bound_su)});
    out.records.push_back(rec);
    out.solutions.push_back(std::move(sol));
  }
  out.fit = fit_rate(out.records, 100.0 * options.tol);
  return out;
}

ActivityResult activity_transition(const ManufacturedInstance& instance,
                                   const std::vector<double>& alphas, double tau,
                                   const ExperimentOptions& options) {
  require_alphas(alphas, 1);
  ActivityResult out;
  std::optional<GridFunction> warm;
  for (const double alpha : alphas) {
    const Stopwatch watch(options.record_timing);
    const Solution sol = solve(RegularizedProblem(instance.set, instance.y_d, alpha), options.tol, warm);
    warm = sol.u;
    out.records.push_back(make_record(alpha, 0.0, 0.0, sol, instance.set, instance.u_bar,
                                      instance.y_d, watch.seconds()));
    out.inactive.push_back(inactive_point(out.records.back(), tau));
  }
  if (!out.inactive.back()) {
    throw Error(ErrorKind::kNoTransition,
                "constraints are still active at the smallest alpha " + fmt_num(alphas.back()));
  }
  std::size_t first = out.inactive.size() - 1;
  while (first > 0 && out.inactive[first - 1]) --first;
  out.never_active = first == 0;
  out.alpha0 = out.never_active ? kInfinity : alphas[first];
  return out;
}

double NoiseRule::alpha(double delta) const { return c * std::pow(delta, s); }

void NoiseRule::validate() const {
  if (!(s > 0.0 && s < 1.0)) {
    throw Error(ErrorKind::kInvalidRule,
                "exponent s = " + fmt_num(s) + " must lie in (0, 1) so that delta/alpha -> 0");
  }
  if (!(c > 0.0) || !std::isfinite(c)) {
    throw Error(ErrorKind::kInvalidRule, "rule constant must be positive");
  }
}

std::pair<SweepRecord, Solution> noise_point(const ManufacturedInstance& instance, double delta,
                                             double alpha, std::uint64_t seed,
                                             const ExperimentOptions& options) {
  const Stopwatch watch(options.record_timing);
  const NoisyData noisy = add_noise(instance.y_d, delta, seed);
  Solution sol = solve(RegularizedProblem(instance.set, noisy.y_delta, alpha), options.tol);
  SweepRecord rec = make_record(alpha, 0.0, delta, sol, instance.set, instance.u_bar,
                                instance.y_d, watch.seconds());
  return {rec, std::move(sol)};
}

NoiseResult noise_study(const ManufacturedInstance& instance, const std::vector<double>& deltas,
                        const NoiseRule& rule, std::uint64_t seed,
                        const ExperimentOptions& options) {
  rule.validate();
  if (deltas.empty()) throw Error(ErrorKind::kInvalidArgument, "noise study needs noise levels");
  NoiseResult out;
  const double slack = 10.0 * options.tol;
  for (const double delta : deltas) {
    if (!(delta > 0.0)) {
      throw Error(ErrorKind::kInvalidArgument, "noise levels must be positive under a rule");
    }
    const double alpha = rule.alpha(delta);
    auto [rec, sol] = noise_point(instance, delta, alpha, seed, options);
    const double data_error = delta + instance.residual;
    const double bound_u =
        std::sqrt(alpha) * instance.w_norm + data_error / std::sqrt(alpha) + slack;
    const double bound_su = 2.0 * alpha * instance.w_norm + data_error + slack;
    out.checks.push_back({"bound_u[delta=" + fmt_num(delta) + "]", rec.err_u <= bound_u,
                          fmt_num(rec.err_u) + " <= " + fmt_num(bound_u)});
    out.checks.push_back({"bound_Su[delta=" + fmt_num(delta) + "]", rec.err_Su <= bound_su,
                          fmt_num(rec.err_Su) + " <= " + fmt_num(bound_su)});
    out.records.push_back(rec);
    out.solutions.push_back(std::move(sol));
  }

  // Along decreasing delta both alpha(delta) and delta / alpha(delta) must fall.
  std::vector<std::size_t> order(deltas.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return deltas[a] > deltas[b]; });
  bool limits = true;
  for (std::size_t k = 1; k < order.size(); ++k) {
    const double d0 = deltas[order[k - 1]], d1 = deltas[order[k]];
    limits = limits && rule.alpha(d1) < rule.alpha(d0) &&
             d1 / rule.alpha(d1) < d0 / rule.alpha(d0);
  }
  out.checks.push_back({"rule_limits", limits,
                        "alpha = " + fmt_num(rule.c) + " delta^" + fmt_num(rule.s)});

  if (instance.interior()) {
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      const SweepRecord& r = out.records[*it];
      if (r.n_active_lo + r.n_active_up + r.n_active_state != 0) break;
      out.delta0 = deltas[*it];
    }
  }
  return out;
}

LavrentievResult lavrentiev_sweep(const AdmissibleSet& set, const GridFunction& y_d, double alpha,
                                  const std::vector<double>& lambdas, LavrentievSign sign,
                                  const GridFunction& u_hat, const ExperimentOptions& options) {
  if (lambdas.empty()) throw Error(ErrorKind::kInvalidArgument, "lavrentiev sweep needs lambdas");
  const AdmissibleSet base = set.with_lambda(0.0, sign);
  const SlaterInfo info = slater(base, u_hat);
  for (const double lambda : lambdas) {
    if (!(lambda >= 0.0)) throw Error(ErrorKind::kInvalidArgument, "lambda must be >= 0");
    if (sign == LavrentievSign::kPlus && lambda > info.lambda_max) {
      throw Error(ErrorKind::kLambdaExceedsSlaterCap,
                  "lambda " + fmt_num(lambda) + " exceeds tau/||u_hat||_inf = " +
                      fmt_num(info.lambda_max));
    }
  }
  const double floor = 10.0 * options.tol;
  const RegularizedProblem reference_problem(base, y_d, alpha);
  Solution reference = solve(reference_problem, options.tol);
  LavrentievResult out{{}, {}, reference, info, 0.0, kInfinity, std::nullopt, {}};

  std::optional<GridFunction> warm = reference.u;
  for (const double lambda : lambdas) {
    const Stopwatch watch(options.record_timing);
    const AdmissibleSet set_lambda = base.with_lambda(lambda, sign);
    const RegularizedProblem problem(set_lambda, y_d, alpha);
    Solution sol = solve(problem, options.tol, warm);
    warm = sol.u;
    SweepRecord rec = make_record(alpha, lambda, 0.0, sol, set_lambda, reference.u, y_d,
                                  watch.seconds());
    if (lambda > 0.0) {
      const double scaled = rec.err_u * alpha / lambda;
      out.c_fit = std::max(out.c_fit, scaled);
      if (rec.err_u > floor) out.c_min = std::min(out.c_min, scaled);
    }
    const std::string tag = "[lambda=" + fmt_num(lambda) + "]";
    if (sign == LavrentievSign::kPlus) {
      const FeasibilityReport f = feasibility(sol.u, base);
      out.checks.push_back({"feasible_for_P" + tag, f.feasible,
                            "state margin " + fmt_num(f.state_margin)});
      const double obj = problem.objective(sol.u);
      const double obj0 = reference_problem.objective(reference.u);
      out.checks.push_back({"objective_monotone" + tag,
                            obj >= obj0 - floor * (1.0 + std::abs(obj0)),
                            fmt_num(obj) + " >= " + fmt_num(obj0)});
    } else {
      const Eigen::VectorXd su = restrict(sol.y, set.state().region);
      const Eigen::VectorXd ur = restrict(sol.u, set.state().region);
      double violation = 0.0;
      for (Index j = 0; j < su.size(); ++j) {
        violation = std::max(violation, su[j] - set.state().psi[j]);
      }
      const double allowed = lambda * (ur.size() ? ur.cwiseAbs().maxCoeff() : 0.0) + floor;
      out.checks.push_back({"minus_violation_bounded" + tag, violation <= allowed,
                            fmt_num(violation) + " <= " + fmt_num(allowed)});
    }
    out.records.push_back(rec);
    out.solutions.push_back(std::move(sol));
  }
  out.checks.push_back({"c_fit_finite", std::isfinite(out.c_fit), "c_fit = " + fmt_num(out.c_fit)});

  std::vector<std::size_t> order(lambdas.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return lambdas[a] < lambdas[b]; });
  for (const std::size_t k : order) {
    if (out.records[k].err_u > floor) break;
    out.lambda_coincide = lambdas[k];
  }
  return out;
}

TotalErrorResult total_error_study(const ManufacturedInstance& instance,
                                   const std::vector<double>& alphas, double lambda_cap,
                                   LavrentievSign sign, const ExperimentOptions& options) {
  require_alphas(alphas, 4);
  if (!(lambda_cap >= 0.0)) throw Error(ErrorKind::kInvalidArgument, "lambda cap must be >= 0");
  TotalErrorResult out;
  const double slack = 10.0 * options.tol;
  out.checks.push_back({"strong_source", instance.strong_source(1e-8) && instance.interior(),
                        "u_bar = S* w with tau = " + fmt_num(instance.tau)});
  std::optional<GridFunction> warm0, warm;
  for (const double alpha : alphas) {
    const Stopwatch watch(options.record_timing);
    const double lambda = std::min(lambda_cap, alpha);
    const AdmissibleSet set_lambda = instance.set.with_lambda(lambda, sign);
    const Solution tik = solve(RegularizedProblem(instance.set, instance.y_d, alpha), options.tol, warm0);
    Solution sol = solve(RegularizedProblem(set_lambda, instance.y_d, alpha), options.tol, warm);
    warm0 = tik.u;
    warm = sol.u;
    SweepRecord rec = make_record(alpha, lambda, 0.0, sol, set_lambda, instance.u_bar,
                                  instance.y_d, watch.seconds());
    const double e_tik = norm(instance.u_bar - tik.u);
    const double e_lav = norm(tik.u - sol.u);
    out.checks.push_back({"error_split[alpha=" + fmt_num(alpha) + "]",
                          rec.err_u <= e_tik + e_lav + slack,
                          fmt_num(rec.err_u) + " <= " + fmt_num(e_tik) + " + " + fmt_num(e_lav)});
    out.tikhonov_error.push_back(e_tik);
    out.lavrentiev_error.push_back(e_lav);
    out.records.push_back(rec);
    out.solutions.push_back(std::move(sol));
  }
  out.fit = fit_rate(out.records, 100.0 * options.tol);
  return out;
}

ContinuityResult alpha_continuity_check(const RegularizedProblem& problem,
                                        const std::vector<std::pair<double, double>>& pairs,
                                        const ExperimentOptions& options) {
  ContinuityResult out;
  for (const auto& [alpha, beta] : pairs) {
    if (!(beta > 0.0) || !(alpha > 0.0)) {
      throw Error(ErrorKind::kAlphaNonPositive, "continuity pairs need positive parameters");
    }
    Solution ua = solve(RegularizedProblem(problem.set, problem.y_d, alpha), options.tol);
    Solution ub = solve(RegularizedProblem(problem.set, problem.y_d, beta), options.tol, ua.u);
    const double dist = norm(ub.u - ua.u);
    const double bound = std::abs(alpha - beta) / beta * norm(ua.u) + 20.0 * options.tol;
    out.pairs.emplace_back(alpha, beta);
    out.distance.push_back(dist);
    out.bound.push_back(bound);
    out.passed.push_back(dist <= bound);
    out.solutions.push_back(std::move(ua));
    out.solutions.push_back(std::move(ub));
  }
  return out;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRecord>& records) {
  out << "alpha,lambda,delta,err_u,err_Su,margin_lo,margin_up,margin_state,"
         "n_active_lo,n_active_up,n_active_state,iters,seconds\n";
  char buf[512];
  for (const auto& r : records) {
    std::snprintf(buf, sizeof(buf),
                  "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%lld,%lld,%lld,%d,%.17g\n",
                  r.alpha, r.lambda, r.delta, r.err_u, r.err_Su, r.margin_lo, r.margin_up,
                  r.margin_state, static_cast<long long>(r.n_active_lo),
                  static_cast<long long>(r.n_active_up), static_cast<long long>(r.n_active_state),
                  r.iterations, r.seconds);
    out << buf;
  }
}

}  // namespace tlreg
