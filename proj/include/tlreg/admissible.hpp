#pragma once

#include <limits>
#include <memory>
#include <vector>

#include <Eigen/Core>

#include "tlreg/grid.hpp"
#include "tlreg/operators.hpp"

namespace tlreg {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();
/// Margins above -kFeasibilityTol count as satisfied.
inline constexpr double kFeasibilityTol = 1e-9;
/// Margins at or below kActivityThreshold classify a constraint as active.
inline constexpr double kActivityThreshold = 1e-6;

/// 0 <= u <= b. A node with b_i = +inf has no upper bound.
class BoxBounds {
 public:
  explicit BoxBounds(GridFunction upper);

  const GridFunction& upper() const { return upper_; }
  bool is_infinite(Index i) const { return upper_[i] == kInfinity; }
  const DomainGrid& grid() const { return upper_.grid(); }

 private:
  GridFunction upper_;
};

enum class LavrentievSign { kPlus, kMinus };

const char* to_string(LavrentievSign sign);

/// lambda u + S u <= psi (plus) or S u - lambda u <= psi (minus) on the region.
/// psi_j = +inf switches the constraint off at that node.
struct StateConstraint {
  StateConstraint(ObservationRegion region, Eigen::VectorXd psi, double lambda = 0.0,
                  LavrentievSign sign = LavrentievSign::kPlus);

  ObservationRegion region;
  Eigen::VectorXd psi;
  double lambda;
  LavrentievSign sign;

  double signed_lambda() const { return sign == LavrentievSign::kPlus ? lambda : -lambda; }
};

/// U_ad (lambda = 0) or U_ad^lambda (lambda > 0).
class AdmissibleSet {
 public:
  AdmissibleSet(std::shared_ptr<const AssembledOperator> op, BoxBounds box, StateConstraint state);

  const AssembledOperator& op() const { return *op_; }
  const std::shared_ptr<const AssembledOperator>& op_ptr() const { return op_; }
  const DomainGrid& grid() const { return op_->grid(); }
  const BoxBounds& box() const { return box_; }
  const StateConstraint& state() const { return state_; }

  AdmissibleSet with_lambda(double lambda) const;
  AdmissibleSet with_lambda(double lambda, LavrentievSign sign) const;

  /// (lambda u +- S u) restricted to the region.
  Eigen::VectorXd state_map(const Eigen::VectorXd& u) const;
  /// Adjoint of state_map in the weighted inner products: maps region values eta
  /// to S*(E eta) +- lambda E eta, E the zero extension.
  Eigen::VectorXd state_adjoint(const Eigen::VectorXd& eta) const;

 private:
  std::shared_ptr<const AssembledOperator> op_;
  BoxBounds box_;
  StateConstraint state_;
};

struct FeasibilityReport {
  double lower_margin = kInfinity;  // min u_i
  double upper_margin = kInfinity;  // min (b_i - u_i) over finite b
  double state_margin = kInfinity;  // min (psi_j - (lambda u + S u)_j) over finite psi
  bool feasible = true;

  double min_margin() const;
};

struct ActiveSets {
  std::vector<Index> lower;
  std::vector<Index> upper;
  std::vector<Index> state;  // grid node indices inside the region

  bool empty() const { return lower.empty() && upper.empty() && state.empty(); }
  bool operator==(const ActiveSets&) const = default;
};

struct SlaterInfo {
  double tau;
  double lambda_max;  // +inf when the Slater point vanishes on the region
};

GridFunction project_box(const GridFunction& v, const BoxBounds& box);

/// argmin over the admissible set of ||u - v||, computed by the QP engine with
/// identity Hessian. InfeasibleSet if the set is empty, NonConvergence otherwise.
GridFunction project_admissible(const GridFunction& v, const AdmissibleSet& set,
                                double tol = 1e-8);

FeasibilityReport feasibility(const GridFunction& u, const AdmissibleSet& set,
                              double tol = kFeasibilityTol);

/// Margins at or below `threshold` are reported active.
ActiveSets classify_activity(const GridFunction& u, const AdmissibleSet& set,
                             double threshold = kActivityThreshold);

/// tau = min over the region of (psi - S u_hat), lambda_max = tau / ||u_hat||_inf(D').
/// The Lavrentiev term of `set` is ignored.
SlaterInfo slater(const AdmissibleSet& set, const GridFunction& u_hat);

}  // namespace tlreg
