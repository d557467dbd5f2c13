#include "tlreg/manufacture.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "tlreg/errors.hpp"

namespace tlreg {

namespace {

nlohmann::json finite_or_null(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

double number_or_inf(const nlohmann::json& j) {
  return j.is_null() ? kInfinity : j.get<double>();
}

nlohmann::json values_json(const GridFunction& f) {
  return std::vector<double>(f.values().data(), f.values().data() + f.size());
}

GridFunction values_from_json(const DomainGrid& grid, const nlohmann::json& j) {
  const auto v = j.get<std::vector<double>>();
  return GridFunction(grid, Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Index>(v.size())));
}

}  // namespace

GridFunction random_direction(const DomainGrid& grid, std::uint64_t seed) {
  LinearGenerator gen(seed);
  GridFunction e(grid);
  for (Index i = 0; i < e.size(); ++i) e[i] = gen.symmetric_uniform();
  const double nrm = norm(e);
  if (nrm == 0.0) {
    e = GridFunction::constant(grid, 1.0);
    return (1.0 / norm(e)) * e;
  }
  return (1.0 / nrm) * e;
}

bool ManufacturedInstance::strong_source(double tol) const {
  return norm(u_bar - apply_adjoint(set.op(), w)) <= tol;
}

ManufacturedInstance manufacture(const GridFunction& w, const AdmissibleSet& set, bool attainable,
                                 double residual_level, std::uint64_t seed, double tol) {
  require_same_grid(w.grid(), set.grid(), "manufacture");
  if (set.state().lambda != 0.0) {
    throw Error(ErrorKind::kInvalidArgument, "manufactured instances use lambda = 0");
  }
  if (!(residual_level >= 0.0)) {
    throw Error(ErrorKind::kInvalidArgument, "residual level must be nonnegative");
  }
  const GridFunction s_adj_w = apply_adjoint(set.op(), w);
  GridFunction u_bar = project_admissible(s_adj_w, set, tol);
  // The projection is the identity on interior points; snap to S* w exactly there.
  if (norm(u_bar - s_adj_w) <= 10.0 * tol && feasibility(s_adj_w, set, 0.0).feasible) {
    u_bar = s_adj_w;
  }
  GridFunction y_d = apply(set.op(), u_bar);
  if (!attainable && residual_level > 0.0) {
    y_d += residual_level * random_direction(set.grid(), seed);
  }
  const FeasibilityReport margins = feasibility(u_bar, set);
  ManufacturedInstance inst{set, w, u_bar, y_d, attainable, margins, margins.min_margin(),
                            norm(w), norm(apply(set.op(), u_bar) - y_d)};
  return inst;
}

NoisyData add_noise(const GridFunction& y_d, double delta, std::uint64_t seed) {
  if (!(delta >= 0.0) || !std::isfinite(delta)) {
    throw Error(ErrorKind::kInvalidArgument, "noise level must be finite and >= 0");
  }
  if (delta == 0.0) return {y_d, 0.0, seed};
  GridFunction y = y_d + delta * random_direction(y_d.grid(), seed);
  return {std::move(y), delta, seed};
}

SourceRecovery recover_source(const std::vector<PathPoint>& path, const GridFunction& y_d,
                              const AdmissibleSet& set, double tol) {
  if (path.empty()) throw Error(ErrorKind::kEmptyPath, "source recovery needs a solution path");
  const auto estimate = [&](const PathPoint& p) {
    GridFunction w = p.solution.y - y_d;
    w *= -1.0 / p.alpha;
    return w;
  };
  SourceRecovery out{estimate(path.back()), 0.0, {}, kInfinity};
  for (const auto& p : path) {
    out.discrepancy_ratio.push_back(norm(p.solution.y - y_d) / p.alpha);
  }
  const GridFunction projected =
      project_admissible(apply_adjoint(set.op(), out.w_est), set.with_lambda(0.0), tol);
  out.certificate = norm(projected - path.back().solution.u);
  if (path.size() >= 2) out.w_drift = norm(out.w_est - estimate(path[path.size() - 2]));
  return out;
}

OptimalAlpha optimal_alpha(double residual_norm, double w_norm) {
  if (!(w_norm > 0.0)) {
    throw Error(ErrorKind::kZeroSourceNorm, "source element has zero norm");
  }
  if (residual_norm == 0.0) return {0.0, true};
  return {residual_norm / w_norm, false};
}

nlohmann::json to_json(const ManufacturedInstance& instance) {
  const DomainGrid& g = instance.set.grid();
  return {
      {"grid", {{"d", g.dimension()}, {"n", g.nodes_per_axis()}}},
      {"w", values_json(instance.w)},
      {"u_bar", values_json(instance.u_bar)},
      {"y_d", values_json(instance.y_d)},
      {"attainable", instance.attainable},
      {"margins",
       {{"lower", finite_or_null(instance.margins.lower_margin)},
        {"upper", finite_or_null(instance.margins.upper_margin)},
        {"state", finite_or_null(instance.margins.state_margin)},
        {"feasible", instance.margins.feasible}}},
      {"tau", finite_or_null(instance.tau)},
      {"w_norm", instance.w_norm},
      {"residual", instance.residual},
  };
}

ManufacturedInstance instance_from_json(const nlohmann::json& j, const AdmissibleSet& set) {
  const DomainGrid grid(j.at("grid").at("d").get<int>(), j.at("grid").at("n").get<int>());
  require_same_grid(grid, set.grid(), "instance_from_json");
  FeasibilityReport margins;
  margins.lower_margin = number_or_inf(j.at("margins").at("lower"));
  margins.upper_margin = number_or_inf(j.at("margins").at("upper"));
  margins.state_margin = number_or_inf(j.at("margins").at("state"));
  margins.feasible = j.at("margins").at("feasible").get<bool>();
  return ManufacturedInstance{set,
                              values_from_json(grid, j.at("w")),
                              values_from_json(grid, j.at("u_bar")),
                              values_from_json(grid, j.at("y_d")),
                              j.at("attainable").get<bool>(),
                              margins,
                              number_or_inf(j.at("tau")),
                              j.at("w_norm").get<double>(),
                              j.at("residual").get<double>()};
}

}  // namespace tlreg
