#include "tlreg/operators.hpp"

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include "tlreg/errors.hpp"

namespace tlreg {

const char* to_string(OperatorKind kind) {
  return kind == OperatorKind::kPoisson ? "poisson" : "fredholm";
}

const char* to_string(KernelSpec::Type type) {
  switch (type) {
    case KernelSpec::Type::kConstant: return "constant";
    case KernelSpec::Type::kSeparable: return "separable";
    case KernelSpec::Type::kGaussian: return "gaussian";
  }
  return "unknown";
}

double KernelSpec::operator()(const Point& x, const Point& xp, int dimension) const {
  switch (type) {
    case Type::kConstant:
      return scale;
    case Type::kSeparable: {
      double dot = 0.0;
      for (int k = 0; k < dimension; ++k) dot += x[k] * xp[k];
      return scale * dot;
    }
    case Type::kGaussian: {
      double dist2 = 0.0;
      for (int k = 0; k < dimension; ++k) dist2 += (x[k] - xp[k]) * (x[k] - xp[k]);
      return scale * std::exp(-dist2 / (width * width));
    }
  }
  return 0.0;
}

struct AssembledOperator::SparseFactor {
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
};

AssembledOperator::AssembledOperator(OperatorKind kind, const DomainGrid& grid,
                                     const KernelSpec& kernel)
    : kind_(kind), grid_(grid), kernel_(kernel), gram_(std::make_shared<GramCache>()) {}

const Eigen::MatrixXd& AssembledOperator::dense() const {
  if (!dense_) {
    throw Error(ErrorKind::kGridTooLarge, "operator with " + std::to_string(grid_.size()) +
                                              " unknowns has no dense representation");
  }
  return *dense_;
}

const Eigen::MatrixXd& AssembledOperator::dense_adjoint() const {
  dense();
  return *adjoint_;
}

const Eigen::MatrixXd& AssembledOperator::gram() const {
  const auto& s = dense();
  std::call_once(gram_->once, [&] { gram_->matrix.noalias() = dense_adjoint() * s; });
  return gram_->matrix;
}

Eigen::VectorXd AssembledOperator::apply(const Eigen::VectorXd& u) const {
  if (u.size() != grid_.size()) {
    throw Error(ErrorKind::kDimensionMismatch, "apply: vector length differs from grid size");
  }
  if (dense_) return (*dense_) * u;
  return factor_->ldlt.solve(u);
}

Eigen::VectorXd AssembledOperator::apply_adjoint(const Eigen::VectorXd& y) const {
  if (y.size() != grid_.size()) {
    throw Error(ErrorKind::kDimensionMismatch,
                "apply_adjoint: vector length differs from grid size");
  }
  if (adjoint_) return (*adjoint_) * y;
  // The factorized Laplacian is symmetric and the weights are uniform.
  return factor_->ldlt.solve(y);
}

namespace {

Eigen::SparseMatrix<double> laplacian(const DomainGrid& grid) {
  const Index size = grid.size();
  const int n = grid.nodes_per_axis();
  const double inv_h2 = 1.0 / (grid.spacing() * grid.spacing());
  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(static_cast<size_t>(size) * (2 * grid.dimension() + 1));
  for (Index i = 0; i < size; ++i) {
    const auto idx = grid.axis_indices(i);
    entries.emplace_back(i, i, 2.0 * grid.dimension() * inv_h2);
    Index stride = 1;
    for (int k = 0; k < grid.dimension(); ++k) {
      if (idx[k] > 0) entries.emplace_back(i, i - stride, -inv_h2);
      if (idx[k] < n - 1) entries.emplace_back(i, i + stride, -inv_h2);
      stride *= n;
    }
  }
  Eigen::SparseMatrix<double> a(size, size);
  a.setFromTriplets(entries.begin(), entries.end());
  return a;
}

// S* = W^{-1} S^T W, with W the node weights.
Eigen::MatrixXd weighted_transpose(const Eigen::MatrixXd& s, const Eigen::VectorXd& w) {
  return w.cwiseInverse().asDiagonal() * s.transpose() * w.asDiagonal();
}

}  // namespace

AssembledOperator assemble_poisson(const DomainGrid& grid, bool require_dense) {
  AssembledOperator op(OperatorKind::kPoisson, grid, KernelSpec{});
  const Eigen::SparseMatrix<double> a = laplacian(grid);
  if (grid.size() <= kDenseCap) {
    const Eigen::MatrixXd dense_a(a);
    Eigen::MatrixXd s = dense_a.llt().solve(Eigen::MatrixXd::Identity(grid.size(), grid.size()));
    // Symmetrize away round-off; the exact inverse is symmetric.
    s = 0.5 * (s + s.transpose()).eval();
    op.adjoint_ = std::make_shared<const Eigen::MatrixXd>(weighted_transpose(s, grid.weights()));
    op.dense_ = std::make_shared<const Eigen::MatrixXd>(std::move(s));
    return op;
  }
  if (require_dense) {
    throw Error(ErrorKind::kGridTooLarge, "dense poisson assembly requested for " +
                                              std::to_string(grid.size()) + " unknowns (cap " +
                                              std::to_string(kDenseCap) + ")");
  }
  auto factor = std::make_shared<AssembledOperator::SparseFactor>();
  factor->ldlt.compute(a);
  if (factor->ldlt.info() != Eigen::Success) {
    throw Error(ErrorKind::kNonConvergence, "sparse Laplacian factorization failed");
  }
  op.factor_ = std::move(factor);
  return op;
}

AssembledOperator assemble_fredholm(const DomainGrid& grid, const KernelSpec& kernel) {
  if (!std::isfinite(kernel.scale) || !std::isfinite(kernel.width)) {
    throw Error(ErrorKind::kInvalidKernelParameter, "kernel parameters must be finite");
  }
  if (kernel.type == KernelSpec::Type::kGaussian && kernel.width <= 0.0) {
    throw Error(ErrorKind::kInvalidKernelParameter, "gaussian kernel width must be positive");
  }
  if (grid.size() > kDenseCap) {
    throw Error(ErrorKind::kGridTooLarge, "fredholm operator needs dense assembly, " +
                                              std::to_string(grid.size()) + " unknowns exceed " +
                                              std::to_string(kDenseCap));
  }
  AssembledOperator op(OperatorKind::kFredholm, grid, kernel);
  const Index size = grid.size();
  Eigen::MatrixXd s(size, size);
  for (Index j = 0; j < size; ++j) {
    const Point xj = grid.coordinate(j);
    for (Index i = 0; i < size; ++i) {
      s(i, j) = grid.weight(j) * kernel(grid.coordinate(i), xj, grid.dimension());
    }
  }
  op.adjoint_ = std::make_shared<const Eigen::MatrixXd>(weighted_transpose(s, grid.weights()));
  op.dense_ = std::make_shared<const Eigen::MatrixXd>(std::move(s));
  return op;
}

GridFunction apply(const AssembledOperator& op, const GridFunction& u) {
  require_same_grid(op.grid(), u.grid(), "apply");
  return GridFunction(op.grid(), op.apply(u.values()));
}

GridFunction apply_adjoint(const AssembledOperator& op, const GridFunction& y) {
  require_same_grid(op.grid(), y.grid(), "apply_adjoint");
  return GridFunction(op.grid(), op.apply_adjoint(y.values()));
}

}  // namespace tlreg
