#include "tlreg/qp_engine.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tlreg/errors.hpp"

namespace tlreg {

double KktResiduals::max() const {
  return std::max({stationarity, primal, dual, complementarity});
}

namespace {

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

using Eigen::VectorXd;
using Eigen::MatrixXd;

// Everything the iterations need, gathered once per call.
class Instance {
 public:
  Instance(const QuadraticModel& model, const AdmissibleSet& set)
      : model_(model), set_(set), op_(set.op()) {
    const Index n = set.grid().size();
    if (model.linear.size() != n) {
      throw Error(ErrorKind::kDimensionMismatch, "quadratic model has wrong linear term size");
    }
    weight_ = set.grid().weight(0);
    upper_ = set.box().upper().values();
    psi_ = set.state().psi;
    region_ = set.state().region.indices();
    for (Index j = 0; j < psi_.size(); ++j) {
      if (psi_[j] != kInfinity) finite_rows_.push_back(j);
    }
    signed_lambda_ = set.state().signed_lambda();
    if (op_.has_dense()) {
      const MatrixXd& s = op_.dense();
      const MatrixXd& s_adj = op_.dense_adjoint();
      const Index m = static_cast<Index>(region_.size());
      state_rows_.resize(m, n);
      state_cols_.resize(n, m);
      for (Index j = 0; j < m; ++j) {
        const Index i = region_[static_cast<size_t>(j)];
        state_rows_.row(j) = s.row(i);
        state_rows_(j, i) += signed_lambda_;
        state_cols_.col(j) = s_adj.col(i);
        state_cols_(i, j) += signed_lambda_;
      }
      if (model.gram_weight != 0.0) gram_ = &op_.gram();
    }
  }

  Index size() const { return upper_.size(); }
  Index region_size() const { return psi_.size(); }
  bool dense() const { return op_.has_dense(); }
  double weight() const { return weight_; }
  const VectorXd& upper() const { return upper_; }
  const VectorXd& psi() const { return psi_; }
  const std::vector<Index>& finite_rows() const { return finite_rows_; }
  const std::vector<Index>& region() const { return region_; }
  const QuadraticModel& model() const { return model_; }
  const MatrixXd& state_rows() const { return state_rows_; }
  const MatrixXd& state_cols() const { return state_cols_; }
  const MatrixXd* gram() const { return gram_; }
  double signed_lambda() const { return signed_lambda_; }

  VectorXd hessian(const VectorXd& u) const {
    VectorXd out = model_.shift * u;
    if (model_.gram_weight != 0.0) {
      if (gram_) {
        out.noalias() += model_.gram_weight * ((*gram_) * u);
      } else {
        out += model_.gram_weight * op_.apply_adjoint(op_.apply(u));
      }
    }
    return out;
  }

  VectorXd gradient(const VectorXd& u) const { return hessian(u) - model_.linear; }

  double objective(const VectorXd& u) const {
    return 0.5 * weight_ * u.dot(hessian(u)) - weight_ * model_.linear.dot(u);
  }

  // (G u) on the region, G = S +- lambda I restricted.
  VectorXd state(const VectorXd& u) const {
    if (dense()) return state_rows_ * u;
    return set_.state_map(u);
  }

  VectorXd state_adjoint(const VectorXd& eta) const {
    if (dense()) return state_cols_ * eta;
    return set_.state_adjoint(eta);
  }

  // g = G u - psi, with -inf on switched-off rows.
  VectorXd state_gap(const VectorXd& u) const {
    VectorXd g = state(u) - psi_;
    return g;
  }

  VectorXd project_box(const VectorXd& v) const {
    VectorXd out(v.size());
    for (Index i = 0; i < v.size(); ++i) out[i] = std::clamp(v[i], 0.0, upper_[i]);
    return out;
  }

  double weighted_norm(const VectorXd& v) const { return std::sqrt(weight_ * v.squaredNorm()); }

 private:
  const QuadraticModel& model_;
  const AdmissibleSet& set_;
  const AssembledOperator& op_;
  double weight_ = 1.0;
  VectorXd upper_;
  VectorXd psi_;
  std::vector<Index> region_;
  std::vector<Index> finite_rows_;
  double signed_lambda_ = 0.0;
  MatrixXd state_rows_;
  MatrixXd state_cols_;
  const MatrixXd* gram_ = nullptr;
};

VectorXd probe_vector(Index n) {
  VectorXd v(n);
  for (Index i = 0; i < n; ++i) v[i] = 1.0 + 0.5 * std::sin(1.7 * static_cast<double>(i) + 0.3);
  return v;
}

// Largest eigenvalue of a self-adjoint positive semidefinite map.
template <typename Map>
double power_iteration(const Map& map, Index n, int iterations = 60) {
  VectorXd v = probe_vector(n);
  v.normalize();
  double estimate = 0.0;
  for (int k = 0; k < iterations; ++k) {
    VectorXd mv = map(v);
    const double nrm = mv.norm();
    if (nrm == 0.0) return 0.0;
    estimate = v.dot(mv);
    v = mv / nrm;
  }
  return std::max(estimate, 0.0);
}

struct InnerOutcome {
  double stationarity = kInfinity;
  int iterations = 0;
};

// Accelerated projected gradient (FISTA with gradient restart) for a smooth
// convex function over the box. `grad` returns the weighted gradient.
template <typename Grad>
InnerOutcome box_descent(const Instance& inst, const Grad& grad, double lipschitz, VectorXd& u,
                         double tol, int max_iter) {
  InnerOutcome out;
  const double step = 1.0 / lipschitz;
  VectorXd x = inst.project_box(u);
  VectorXd y = x;
  double t = 1.0;
  for (int k = 1; k <= max_iter; ++k) {
    const VectorXd gy = grad(y);
    VectorXd x_next = inst.project_box(y - step * gy);
    // Gradient-mapping norm at y serves as a cheap stationarity proxy.
    const double mapping = lipschitz * inst.weighted_norm(x_next - y);
    if ((y - x_next).dot(x_next - x) > 0.0) {
      t = 1.0;
      y = x_next;
    } else {
      const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
      y = x_next + ((t - 1.0) / t_next) * (x_next - x);
      t = t_next;
    }
    x = std::move(x_next);
    out.iterations = k;
    if (mapping <= tol && k % 5 == 0) {
      const VectorXd gx = grad(x);
      out.stationarity = lipschitz * inst.weighted_norm(x - inst.project_box(x - step * gx));
      if (out.stationarity <= tol) break;
    }
  }
  if (out.stationarity == kInfinity) {
    const VectorXd gx = grad(x);
    out.stationarity = lipschitz * inst.weighted_norm(x - inst.project_box(x - step * gx));
  }
  u = std::move(x);
  return out;
}

double state_violation(const Instance& inst, const VectorXd& g) {
  double v = 0.0;
  for (Index j : inst.finite_rows()) v = std::max(v, g[j]);
  return v;
}

// Minimizes 1/2 sum_j w_j max(0, g_j)^2 over the box; used only when u = 0 is
// not feasible for the state constraint.
void feasibility_phase(const Instance& inst, VectorXd& u, double lipschitz_state) {
  const auto grad = [&](const VectorXd& x) {
    const VectorXd g = inst.state_gap(x);
    VectorXd p = VectorXd::Zero(g.size());
    for (Index j : inst.finite_rows()) p[j] = std::max(0.0, g[j]);
    return inst.state_adjoint(p);
  };
  const double lip = std::max(lipschitz_state, 1e-300) * 1.1;
  for (int attempt = 0; attempt < 10; ++attempt) {
    box_descent(inst, grad, lip, u, 1e-14, 5000);
    if (state_violation(inst, inst.state_gap(u)) <= 1e-10) return;
  }
  const double violation = state_violation(inst, inst.state_gap(u));
  if (violation > 1e-7) {
    throw Error(ErrorKind::kInfeasibleSet,
                "no point satisfies the box and state constraints (smallest violation " +
                    std::to_string(violation) + ")");
  }
}

struct Pattern {
  std::vector<char> node;   // 0 free, 1 lower, 2 upper
  std::vector<char> row;    // 0 inactive, 1 active (region order)
  bool operator<(const Pattern& o) const {
    return node != o.node ? node < o.node : row < o.row;
  }
  bool operator==(const Pattern& o) const { return node == o.node && row == o.row; }
};

Pattern choose_pattern(const Instance& inst, const VectorXd& u, const VectorXd& residual,
                       const VectorXd& eta, const VectorXd& gap, double c) {
  Pattern p;
  p.node.assign(static_cast<size_t>(inst.size()), 0);
  p.row.assign(static_cast<size_t>(inst.region_size()), 0);
  for (Index i = 0; i < inst.size(); ++i) {
    if (residual[i] - c * u[i] > 0.0) {
      p.node[static_cast<size_t>(i)] = 1;
    } else if (inst.upper()[i] != kInfinity && -residual[i] + c * (u[i] - inst.upper()[i]) > 0.0) {
      p.node[static_cast<size_t>(i)] = 2;
    }
  }
  for (Index j : inst.finite_rows()) {
    if (eta[j] + c * gap[j] > 0.0) p.row[static_cast<size_t>(j)] = 1;
  }
  return p;
}

struct KktPoint {
  VectorXd u;
  VectorXd eta;
};

// Solves the equality-constrained KKT system for a fixed activity pattern.
std::optional<KktPoint> solve_pattern(const Instance& inst, const Pattern& p) {
  const Index n = inst.size();
  std::vector<Index> free_idx, fixed_idx, rows;
  VectorXd u = VectorXd::Zero(n);
  for (Index i = 0; i < n; ++i) {
    const char s = p.node[static_cast<size_t>(i)];
    if (s == 0) {
      free_idx.push_back(i);
    } else {
      fixed_idx.push_back(i);
      u[i] = s == 1 ? 0.0 : inst.upper()[i];
    }
  }
  for (Index j = 0; j < inst.region_size(); ++j) {
    if (p.row[static_cast<size_t>(j)]) rows.push_back(j);
  }
  const Index nf = static_cast<Index>(free_idx.size());
  const Index na = static_cast<Index>(rows.size());
  const QuadraticModel& model = inst.model();

  MatrixXd k = MatrixXd::Zero(nf + na, nf + na);
  VectorXd rhs(nf + na);
  VectorXd u_fixed = u(fixed_idx);
  if (nf > 0) {
    k.topLeftCorner(nf, nf).diagonal().setConstant(model.shift);
    rhs.head(nf) = model.linear(free_idx);
    if (model.gram_weight != 0.0) {
      const MatrixXd& gram = *inst.gram();
      k.topLeftCorner(nf, nf) += model.gram_weight * gram(free_idx, free_idx);
      if (!fixed_idx.empty()) {
        rhs.head(nf) -= model.gram_weight * (gram(free_idx, fixed_idx) * u_fixed);
      }
    }
  }
  if (na > 0) {
    if (nf > 0) {
      k.topRightCorner(nf, na) = inst.state_cols()(free_idx, rows);
      k.bottomLeftCorner(na, nf) = inst.state_rows()(rows, free_idx);
    }
    rhs.tail(na) = inst.psi()(rows);
    if (!fixed_idx.empty()) rhs.tail(na) -= inst.state_rows()(rows, fixed_idx) * u_fixed;
  }

  VectorXd x;
  if (nf + na > 0) {
    Eigen::PartialPivLU<MatrixXd> lu(k);
    x = lu.solve(rhs);
    const double scale = std::max(1.0, rhs.cwiseAbs().maxCoeff());
    const bool accurate =
        x.allFinite() && (k * x - rhs).cwiseAbs().maxCoeff() <= 1e-10 * scale;
    if (!accurate) {
      Eigen::CompleteOrthogonalDecomposition<MatrixXd> cod(k);
      x = cod.solve(rhs);
      if (!x.allFinite() || (k * x - rhs).cwiseAbs().maxCoeff() > 1e-8 * scale) {
        return std::nullopt;
      }
    }
  }
  KktPoint point;
  point.u = std::move(u);
  for (Index f = 0; f < nf; ++f) point.u[free_idx[static_cast<size_t>(f)]] = x[f];
  point.eta = VectorXd::Zero(inst.region_size());
  for (Index a = 0; a < na; ++a) point.eta[rows[static_cast<size_t>(a)]] = x[nf + a];
  return point;
}

QpResult assemble_result(const Instance& inst, const QuadraticModel& model,
                         const AdmissibleSet& set, VectorXd u, VectorXd eta,
                         const Pattern* pattern) {
  QpResult result;
  const VectorXd r = inst.gradient(u) + inst.state_adjoint(eta);
  const Index n = inst.size();
  result.lower_multiplier = VectorXd::Zero(n);
  result.upper_multiplier = VectorXd::Zero(n);
  for (Index i = 0; i < n; ++i) {
    if (pattern) {
      const char s = pattern->node[static_cast<size_t>(i)];
      if (s == 1) result.lower_multiplier[i] = r[i];
      if (s == 2) result.upper_multiplier[i] = -r[i];
    } else {
      result.lower_multiplier[i] = std::max(r[i], 0.0);
      if (inst.upper()[i] != kInfinity) result.upper_multiplier[i] = std::max(-r[i], 0.0);
    }
  }
  if (pattern) {
    for (Index i = 0; i < n; ++i) {
      const char s = pattern->node[static_cast<size_t>(i)];
      if (s == 1) result.pattern.lower.push_back(i);
      if (s == 2) result.pattern.upper.push_back(i);
    }
    for (Index j = 0; j < inst.region_size(); ++j) {
      if (pattern->row[static_cast<size_t>(j)]) {
        result.pattern.state.push_back(inst.region()[static_cast<size_t>(j)]);
      }
    }
  } else {
    result.pattern = classify_activity(GridFunction(set.grid(), u), set, 0.0);
  }
  result.kkt = evaluate_kkt(model, set, u, result.lower_multiplier, result.upper_multiplier, eta);
  result.u = std::move(u);
  result.state_multiplier = std::move(eta);
  return result;
}

// Primal-dual active set iteration started from an approximate primal-dual pair.
std::optional<QpResult> refine(const Instance& inst, const QuadraticModel& model,
                               const AdmissibleSet& set, const VectorXd& u0,
                               const VectorXd& eta0, double tol, int max_iter, int& iterations) {
  const double c = model.shift > 0.0 ? model.shift : 1e-8;
  VectorXd r = inst.gradient(u0) + inst.state_adjoint(eta0);
  Pattern current = choose_pattern(inst, u0, r, eta0, inst.state_gap(u0), c);
  std::set<Pattern> seen;
  for (int it = 0; it < max_iter; ++it) {
    ++iterations;
    seen.insert(current);
    auto point = solve_pattern(inst, current);
    if (!point) return std::nullopt;
    r = inst.gradient(point->u) + inst.state_adjoint(point->eta);
    Pattern next = choose_pattern(inst, point->u, r, point->eta, inst.state_gap(point->u), c);
    if (next == current) {
      QpResult result = assemble_result(inst, model, set, std::move(point->u),
                                        std::move(point->eta), &current);
      if (result.kkt.max() <= tol) return result;
      return std::nullopt;
    }
    if (seen.count(next)) return std::nullopt;
    current = std::move(next);
  }
  return std::nullopt;
}

}  // namespace

KktResiduals evaluate_kkt(const QuadraticModel& model, const AdmissibleSet& set,
                          const Eigen::VectorXd& u, const Eigen::VectorXd& lower_multiplier,
                          const Eigen::VectorXd& upper_multiplier,
                          const Eigen::VectorXd& state_multiplier) {
  const Instance inst(model, set);
  KktResiduals res;
  const VectorXd stationarity = inst.gradient(u) - lower_multiplier + upper_multiplier +
                                inst.state_adjoint(state_multiplier);
  res.stationarity = inst.weighted_norm(stationarity);
  const VectorXd& b = inst.upper();
  for (Index i = 0; i < u.size(); ++i) {
    res.primal = std::max(res.primal, -u[i]);
    res.dual = std::max(res.dual, -lower_multiplier[i]);
    res.complementarity = std::max(res.complementarity, std::abs(lower_multiplier[i] * u[i]));
    if (b[i] == kInfinity) {
      res.dual = std::max(res.dual, std::abs(upper_multiplier[i]));
    } else {
      res.primal = std::max(res.primal, u[i] - b[i]);
      res.dual = std::max(res.dual, -upper_multiplier[i]);
      res.complementarity =
          std::max(res.complementarity, std::abs(upper_multiplier[i] * (b[i] - u[i])));
    }
  }
  const VectorXd g = inst.state_gap(u);
  for (Index j = 0; j < g.size(); ++j) {
    if (inst.psi()[j] == kInfinity) {
      res.dual = std::max(res.dual, std::abs(state_multiplier[j]));
      continue;
    }
    res.primal = std::max(res.primal, g[j]);
    res.dual = std::max(res.dual, -state_multiplier[j]);
    res.complementarity = std::max(res.complementarity, std::abs(state_multiplier[j] * g[j]));
  }
  return res;
}

QpResult minimize_quadratic(const QuadraticModel& model, const AdmissibleSet& set,
                            const QpOptions& options,
                            const std::optional<Eigen::VectorXd>& warm_start) {
  const Instance inst(model, set);
  const Index n = inst.size();
  const Index m = inst.region_size();
  if (!(options.tol > 0.0)) throw Error(ErrorKind::kInvalidArgument, "tolerance must be positive");

  VectorXd u = warm_start ? inst.project_box(*warm_start) : VectorXd::Zero(n);
  if (u.size() != n) throw Error(ErrorKind::kDimensionMismatch, "warm start has wrong size");

  const double lip_model =
      1.1 * power_iteration([&](const VectorXd& v) { return inst.hessian(v); }, n);
  const double lip_state = 1.1 * power_iteration(
      [&](const VectorXd& v) { return inst.state_adjoint(inst.state(v)); }, n);

  bool zero_feasible = true;
  for (Index j : inst.finite_rows()) zero_feasible = zero_feasible && inst.psi()[j] >= 0.0;
  if (!zero_feasible) feasibility_phase(inst, u, lip_state);
  if (inst.finite_rows().empty() && model.shift == 0.0 && model.gram_weight == 0.0) {
    throw Error(ErrorKind::kInvalidArgument, "quadratic model is identically linear");
  }

  VectorXd eta = VectorXd::Zero(m);
  double rho = std::max({0.5 * model.shift, 1e-6 * lip_model, 1e-12});
  int iterations = 0;
  QpResult fallback;
  bool have_fallback = false;

  for (int round = 0; round < options.max_rounds; ++round) {
    // Early rounds only need the active set; later rounds tighten toward tol.
    const double round_tol =
        std::max(options.tol / 10.0, 1e-3 * std::pow(1e-2, static_cast<double>(round)));
    double previous_violation = kInfinity;
    for (int outer = 0; outer < options.max_outer; ++outer) {
      const auto grad = [&](const VectorXd& x) {
        VectorXd g = inst.gradient(x);
        if (!inst.finite_rows().empty()) {
          const VectorXd gap = inst.state_gap(x);
          VectorXd p = VectorXd::Zero(m);
          for (Index j : inst.finite_rows()) p[j] = std::max(0.0, eta[j] + rho * gap[j]);
          g += inst.state_adjoint(p);
        }
        return g;
      };
      const double lip = std::max(lip_model + rho * lip_state, 1e-300);
      const InnerOutcome inner = box_descent(inst, grad, lip, u, round_tol, options.max_inner);
      iterations += inner.iterations;
      if (inst.finite_rows().empty()) break;

      const VectorXd gap = inst.state_gap(u);
      double violation = 0.0;
      for (Index j : inst.finite_rows()) {
        violation = std::max(violation, std::abs(std::min(-gap[j], eta[j] / rho)));
        eta[j] = std::max(0.0, eta[j] + rho * gap[j]);
      }
      if (violation <= round_tol && inner.stationarity <= round_tol) break;
      if (violation > 0.25 * previous_violation) rho = std::min(rho * 10.0, 1e14);
      previous_violation = violation;
    }

    if (inst.dense()) {
      auto refined = refine(inst, model, set, u, eta, options.tol, options.max_refinement,
                            iterations);
      if (refined) {
        refined->iterations = iterations;
        return *refined;
      }
    }
    fallback = assemble_result(inst, model, set, u, eta, nullptr);
    fallback.iterations = iterations;
    have_fallback = true;
    if (fallback.kkt.max() <= options.tol) return fallback;
  }

  if (have_fallback && fallback.kkt.primal > 1e-6) {
    throw Error(ErrorKind::kInfeasibleSet,
                "state constraint violation " + sci(fallback.kkt.primal) +
                    " persists; the admissible set appears to be empty");
  }
  throw Error(ErrorKind::kNonConvergence,
              "KKT residual " + sci(have_fallback ? fallback.kkt.max() : kInfinity) +
                  " above tolerance " + sci(options.tol) + " after " +
                  std::to_string(iterations) + " iterations");
}

}  // namespace tlreg
