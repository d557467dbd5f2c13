// Brute-force reference solver: tries every activity pattern and keeps the one
// whose equality-constrained stationary point is primal and dual feasible.
// Works in plain Euclidean coordinates on purpose, independent of the
// weighted-space formulation used by the QP engine.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tlreg/errors.hpp"
#include "tlreg/solver.hpp"

namespace tlreg {

Solution oracle_solve(const RegularizedProblem& problem, double tol) {
  using Eigen::MatrixXd;
  using Eigen::VectorXd;

  const DomainGrid& grid = problem.set.grid();
  const Index n = grid.size();
  if (n > kOracleMaxNodes) {
    throw Error(ErrorKind::kOracleTooLarge, "oracle enumerates at most " +
                                                std::to_string(kOracleMaxNodes) + " nodes, got " +
                                                std::to_string(n));
  }
  if (!(problem.alpha > 0.0)) throw Error(ErrorKind::kAlphaNonPositive, "alpha must be positive");

  const MatrixXd& s = problem.op().dense();
  const VectorXd w = grid.weights();
  const VectorXd& b = problem.set.box().upper().values();
  const StateConstraint& state = problem.set.state();

  // J(u) = (Su - y)^T W (Su - y) + alpha u^T W u  =>  Q u - q = 0 unconstrained.
  const MatrixXd q_mat = 2.0 * (s.transpose() * w.asDiagonal() * s) +
                         2.0 * problem.alpha * MatrixXd(w.asDiagonal());
  const VectorXd q_vec = 2.0 * (s.transpose() * w.asDiagonal() * problem.y_d.values());

  // Rows of the state constraint with a finite bound: (lambda e_i +- S_i) u <= psi_j.
  std::vector<Index> rows;
  std::vector<Index> row_node;
  for (Index j = 0; j < state.region.size(); ++j) {
    if (std::isfinite(state.psi[j])) {
      rows.push_back(j);
      row_node.push_back(state.region.indices()[static_cast<size_t>(j)]);
    }
  }
  const Index m = static_cast<Index>(rows.size());
  MatrixXd g(m, n);
  VectorXd psi(m);
  for (Index k = 0; k < m; ++k) {
    const Index node = row_node[static_cast<size_t>(k)];
    g.row(k) = s.row(node);
    g(k, node) += state.signed_lambda();
    psi[k] = state.psi[rows[static_cast<size_t>(k)]];
  }

  std::vector<int> node_state(static_cast<size_t>(n), 0);  // 0 free, 1 lower, 2 upper
  std::vector<int> row_state(static_cast<size_t>(m), 0);   // 0 inactive, 1 active
  const auto advance = [&]() {
    for (Index i = 0; i < n; ++i) {
      auto& st = node_state[static_cast<size_t>(i)];
      const int radix = std::isfinite(b[i]) ? 3 : 2;
      if (++st < radix) return true;
      st = 0;
    }
    for (Index k = 0; k < m; ++k) {
      auto& st = row_state[static_cast<size_t>(k)];
      if (++st < 2) return true;
      st = 0;
    }
    return false;
  };

  do {
    std::vector<Index> free_idx;
    std::vector<Index> active_rows;
    VectorXd u = VectorXd::Zero(n);
    for (Index i = 0; i < n; ++i) {
      const int st = node_state[static_cast<size_t>(i)];
      if (st == 0) free_idx.push_back(i);
      if (st == 2) u[i] = b[i];
    }
    for (Index k = 0; k < m; ++k) {
      if (row_state[static_cast<size_t>(k)]) active_rows.push_back(k);
    }
    const Index nf = static_cast<Index>(free_idx.size());
    const Index na = static_cast<Index>(active_rows.size());
    const VectorXd base_grad = q_mat * u - q_vec;  // gradient with free part zeroed

    VectorXd e = VectorXd::Zero(m);
    if (nf + na > 0) {
      MatrixXd k_mat = MatrixXd::Zero(nf + na, nf + na);
      VectorXd rhs(nf + na);
      for (Index a = 0; a < nf; ++a) {
        const Index ia = free_idx[static_cast<size_t>(a)];
        for (Index c = 0; c < nf; ++c) k_mat(a, c) = q_mat(ia, free_idx[static_cast<size_t>(c)]);
        for (Index c = 0; c < na; ++c) k_mat(a, nf + c) = g(active_rows[static_cast<size_t>(c)], ia);
        rhs[a] = -base_grad[ia];
      }
      for (Index r = 0; r < na; ++r) {
        const Index kr = active_rows[static_cast<size_t>(r)];
        for (Index c = 0; c < nf; ++c) k_mat(nf + r, c) = g(kr, free_idx[static_cast<size_t>(c)]);
        rhs[nf + r] = psi[kr] - g.row(kr).dot(u);
      }
      Eigen::FullPivLU<MatrixXd> lu(k_mat);
      if (!lu.isInvertible()) continue;
      const VectorXd x = lu.solve(rhs);
      for (Index a = 0; a < nf; ++a) u[free_idx[static_cast<size_t>(a)]] += x[a];
      for (Index r = 0; r < na; ++r) e[active_rows[static_cast<size_t>(r)]] = x[nf + r];
    }

    // Euclidean multipliers converted to densities (divide by the node weight).
    const VectorXd residual = q_mat * u - q_vec + g.transpose() * e;
    VectorXd mu_lo = VectorXd::Zero(n);
    VectorXd mu_up = VectorXd::Zero(n);
    bool ok = true;
    for (Index i = 0; i < n && ok; ++i) {
      const int st = node_state[static_cast<size_t>(i)];
      if (st == 1) mu_lo[i] = residual[i] / w[i];
      if (st == 2) mu_up[i] = -residual[i] / w[i];
      ok = u[i] >= -tol && u[i] <= b[i] + tol && mu_lo[i] >= -tol && mu_up[i] >= -tol;
    }
    for (Index k = 0; k < m && ok; ++k) {
      ok = g.row(k).dot(u) <= psi[k] + tol && e[k] >= -tol * w[row_node[static_cast<size_t>(k)]];
    }
    if (!ok) continue;

    GridFunction uf(grid, u);
    Eigen::VectorXd eta = Eigen::VectorXd::Zero(state.region.size());
    ActiveSets active;
    for (Index i = 0; i < n; ++i) {
      if (node_state[static_cast<size_t>(i)] == 1) active.lower.push_back(i);
      if (node_state[static_cast<size_t>(i)] == 2) active.upper.push_back(i);
    }
    for (Index k = 0; k < m; ++k) {
      eta[rows[static_cast<size_t>(k)]] = e[k] / w[row_node[static_cast<size_t>(k)]];
      if (row_state[static_cast<size_t>(k)]) active.state.push_back(row_node[static_cast<size_t>(k)]);
    }
    std::sort(active.state.begin(), active.state.end());
    Solution sol{uf,
                 apply(problem.op(), uf),
                 problem.objective(uf),
                 GridFunction(grid, mu_lo),
                 GridFunction(grid, mu_up),
                 eta,
                 active,
                 0,
                 evaluate_kkt(problem.model(), problem.set, u, mu_lo, mu_up, eta)};
    return sol;
  } while (advance());

  throw Error(ErrorKind::kNoFeasiblePattern,
              "no activity pattern yields a primal-dual feasible KKT point");
}

}  // namespace tlreg
