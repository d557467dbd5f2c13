#include "tlreg/admissible.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "tlreg/errors.hpp"
#include "tlreg/qp_engine.hpp"

namespace tlreg {

const char* to_string(LavrentievSign sign) {
  return sign == LavrentievSign::kPlus ? "plus" : "minus";
}

BoxBounds::BoxBounds(GridFunction upper) : upper_(std::move(upper)) {
  for (Index i = 0; i < upper_.size(); ++i) {
    const double b = upper_[i];
    if (std::isnan(b) || b < 0.0 || b == -kInfinity) {
      throw Error(ErrorKind::kInvalidArgument,
                  "upper bound must be nonnegative (node " + std::to_string(i) + ")");
    }
  }
}

StateConstraint::StateConstraint(ObservationRegion region_, Eigen::VectorXd psi_, double lambda_,
                                 LavrentievSign sign_)
    : region(std::move(region_)), psi(std::move(psi_)), lambda(lambda_), sign(sign_) {
  if (psi.size() != region.size()) {
    throw Error(ErrorKind::kDimensionMismatch, "psi has " + std::to_string(psi.size()) +
                                                   " values, region has " +
                                                   std::to_string(region.size()) + " nodes");
  }
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw Error(ErrorKind::kInvalidArgument, "lavrentiev parameter must be finite and >= 0");
  }
  for (Index j = 0; j < psi.size(); ++j) {
    if (std::isnan(psi[j]) || psi[j] == -kInfinity) {
      throw Error(ErrorKind::kInvalidArgument, "psi must be a number or +inf");
    }
  }
}

AdmissibleSet::AdmissibleSet(std::shared_ptr<const AssembledOperator> op, BoxBounds box,
                             StateConstraint state)
    : op_(std::move(op)), box_(std::move(box)), state_(std::move(state)) {
  if (!op_) throw Error(ErrorKind::kInvalidArgument, "admissible set needs an operator");
  require_same_grid(op_->grid(), box_.grid(), "admissible set (box)");
  require_same_grid(op_->grid(), state_.region.grid(), "admissible set (region)");
}

AdmissibleSet AdmissibleSet::with_lambda(double lambda) const {
  return with_lambda(lambda, state_.sign);
}

AdmissibleSet AdmissibleSet::with_lambda(double lambda, LavrentievSign sign) const {
  StateConstraint state(state_.region, state_.psi, lambda, sign);
  return AdmissibleSet(op_, box_, std::move(state));
}

Eigen::VectorXd AdmissibleSet::state_map(const Eigen::VectorXd& u) const {
  const Eigen::VectorXd su = op_->apply(u);
  const auto& idx = state_.region.indices();
  const double sl = state_.signed_lambda();
  Eigen::VectorXd out(state_.region.size());
  for (Index j = 0; j < out.size(); ++j) {
    const Index i = idx[static_cast<size_t>(j)];
    out[j] = su[i] + sl * u[i];
  }
  return out;
}

Eigen::VectorXd AdmissibleSet::state_adjoint(const Eigen::VectorXd& eta) const {
  Eigen::VectorXd ext = Eigen::VectorXd::Zero(grid().size());
  const auto& idx = state_.region.indices();
  for (Index j = 0; j < eta.size(); ++j) ext[idx[static_cast<size_t>(j)]] = eta[j];
  Eigen::VectorXd out = op_->apply_adjoint(ext);
  out += state_.signed_lambda() * ext;
  return out;
}

double FeasibilityReport::min_margin() const {
  return std::min({lower_margin, upper_margin, state_margin});
}

GridFunction project_box(const GridFunction& v, const BoxBounds& box) {
  require_same_grid(v.grid(), box.grid(), "project_box");
  GridFunction out(v);
  for (Index i = 0; i < out.size(); ++i) out[i] = std::clamp(v[i], 0.0, box.upper()[i]);
  return out;
}

GridFunction project_admissible(const GridFunction& v, const AdmissibleSet& set, double tol) {
  require_same_grid(v.grid(), set.grid(), "project_admissible");
  QuadraticModel model;
  model.gram_weight = 0.0;
  model.shift = 2.0;
  model.linear = 2.0 * v.values();
  QpOptions options;
  options.tol = tol;
  QpResult result = minimize_quadratic(model, set, options, v.values());
  return GridFunction(set.grid(), std::move(result.u));
}

FeasibilityReport feasibility(const GridFunction& u, const AdmissibleSet& set, double tol) {
  require_same_grid(u.grid(), set.grid(), "feasibility");
  FeasibilityReport report;
  const auto& b = set.box().upper();
  for (Index i = 0; i < u.size(); ++i) {
    report.lower_margin = std::min(report.lower_margin, u[i]);
    if (!set.box().is_infinite(i)) {
      report.upper_margin = std::min(report.upper_margin, b[i] - u[i]);
    }
  }
  const Eigen::VectorXd g = set.state_map(u.values());
  const auto& psi = set.state().psi;
  for (Index j = 0; j < g.size(); ++j) {
    if (psi[j] == kInfinity) continue;
    report.state_margin = std::min(report.state_margin, psi[j] - g[j]);
  }
  report.feasible = report.lower_margin >= -tol && report.upper_margin >= -tol &&
                    report.state_margin >= -tol;
  return report;
}

ActiveSets classify_activity(const GridFunction& u, const AdmissibleSet& set, double threshold) {
  require_same_grid(u.grid(), set.grid(), "classify_activity");
  ActiveSets active;
  const auto& b = set.box().upper();
  for (Index i = 0; i < u.size(); ++i) {
    if (u[i] <= threshold) active.lower.push_back(i);
    if (!set.box().is_infinite(i) && b[i] - u[i] <= threshold) active.upper.push_back(i);
  }
  const Eigen::VectorXd g = set.state_map(u.values());
  const auto& psi = set.state().psi;
  const auto& idx = set.state().region.indices();
  for (Index j = 0; j < g.size(); ++j) {
    if (psi[j] != kInfinity && psi[j] - g[j] <= threshold) {
      active.state.push_back(idx[static_cast<size_t>(j)]);
    }
  }
  return active;
}

SlaterInfo slater(const AdmissibleSet& set, const GridFunction& u_hat) {
  require_same_grid(u_hat.grid(), set.grid(), "slater");
  const auto& b = set.box().upper();
  for (Index i = 0; i < u_hat.size(); ++i) {
    if (u_hat[i] < 0.0 || u_hat[i] > b[i]) {
      throw Error(ErrorKind::kNotASlaterPoint,
                  "candidate violates the box at node " + std::to_string(i));
    }
  }
  const Eigen::VectorXd su = restrict(apply(set.op(), u_hat), set.state().region);
  const Eigen::VectorXd u_region = restrict(u_hat, set.state().region);
  const auto& psi = set.state().psi;
  double tau = kInfinity;
  for (Index j = 0; j < su.size(); ++j) tau = std::min(tau, psi[j] - su[j]);
  if (!(tau > 0.0)) {
    throw Error(ErrorKind::kNotASlaterPoint,
                "state slack " + std::to_string(tau) + " is not positive");
  }
  const double sup = u_region.size() ? u_region.cwiseAbs().maxCoeff() : 0.0;
  return {tau, sup > 0.0 ? tau / sup : kInfinity};
}

}  // namespace tlreg
