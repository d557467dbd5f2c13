#pragma once

#include <memory>
#include <mutex>

#include <Eigen/Core>

#include "tlreg/grid.hpp"

namespace tlreg {

enum class OperatorKind { kPoisson, kFredholm };

const char* to_string(OperatorKind kind);

/// Largest unknown count for which an operator is held as a dense matrix.
inline constexpr Index kDenseCap = 4096;

/// Built-in Lipschitz kernels for the Fredholm operator.
struct KernelSpec {
  enum class Type { kConstant, kSeparable, kGaussian };

  Type type = Type::kGaussian;
  double scale = 1.0;  // multiplies every kernel
  double width = 0.1;  // Gaussian sigma; unused otherwise

  static KernelSpec constant(double value) { return {Type::kConstant, value, 0.0}; }
  static KernelSpec separable(double scale = 1.0) { return {Type::kSeparable, scale, 0.0}; }
  static KernelSpec gaussian(double width, double scale = 1.0) {
    return {Type::kGaussian, scale, width};
  }

  /// k(x, x') for the first `dimension` coordinates.
  double operator()(const Point& x, const Point& xp, int dimension) const;

  bool operator==(const KernelSpec&) const = default;
};

const char* to_string(KernelSpec::Type type);

/// Discrete forward map S : L2(D) -> L2(D) together with its adjoint in the
/// weighted inner product, S* = W^{-1} S^T W.
///
/// Immutable after construction. Up to kDenseCap unknowns the matrix is held
/// densely; larger Poisson operators keep a sparse Cholesky factorization of the
/// finite-difference Laplacian instead and expose only matrix-free application.
class AssembledOperator {
 public:
  OperatorKind kind() const { return kind_; }
  const DomainGrid& grid() const { return grid_; }
  const KernelSpec& kernel() const { return kernel_; }

  bool has_dense() const { return dense_ != nullptr; }
  /// Throws GridTooLarge for factorized operators.
  const Eigen::MatrixXd& dense() const;
  const Eigen::MatrixXd& dense_adjoint() const;
  /// S* S, built on first use.
  const Eigen::MatrixXd& gram() const;

  Eigen::VectorXd apply(const Eigen::VectorXd& u) const;
  Eigen::VectorXd apply_adjoint(const Eigen::VectorXd& y) const;

 private:
  friend AssembledOperator assemble_poisson(const DomainGrid& grid, bool require_dense);
  friend AssembledOperator assemble_fredholm(const DomainGrid& grid, const KernelSpec& kernel);

  struct SparseFactor;
  struct GramCache {
    std::once_flag once;
    Eigen::MatrixXd matrix;
  };

  AssembledOperator(OperatorKind kind, const DomainGrid& grid, const KernelSpec& kernel);

  OperatorKind kind_;
  DomainGrid grid_;
  KernelSpec kernel_;
  std::shared_ptr<const Eigen::MatrixXd> dense_;
  std::shared_ptr<const Eigen::MatrixXd> adjoint_;
  std::shared_ptr<const SparseFactor> factor_;
  std::shared_ptr<GramCache> gram_;
};

/// Solution operator of -Laplace(y) = u with y = 0 on the boundary, second-order
/// central differences. Dense when n^d <= kDenseCap or when `require_dense` is set
/// (which raises GridTooLarge beyond the cap).
AssembledOperator assemble_poisson(const DomainGrid& grid, bool require_dense = false);

/// S_ij = w_j k(x_i, x_j). Raises InvalidKernelParameter for a non-positive Gaussian
/// width or non-finite parameters, GridTooLarge beyond kDenseCap.
AssembledOperator assemble_fredholm(const DomainGrid& grid, const KernelSpec& kernel);

GridFunction apply(const AssembledOperator& op, const GridFunction& u);
GridFunction apply_adjoint(const AssembledOperator& op, const GridFunction& y);

}  // namespace tlreg
