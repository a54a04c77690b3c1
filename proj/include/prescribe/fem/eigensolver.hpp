#pragma once

// Smallest eigenpairs of K v = lambda M v by shift-invert subspace iteration
// with Rayleigh-Ritz. The start block comes from a seeded mt19937_64, so
// results are reproducible bit for bit on a given build.

#include <Eigen/Dense>
#include <Eigen/OrderingMethods>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cstdint>
#include <limits>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "prescribe/fem/assemble.hpp"

namespace prescribe::fem {

enum class BoundaryKind { Dirichlet, Neumann };

struct BoundaryCondition {
  std::map<std::string, BoundaryKind> kind;

  static BoundaryCondition all(const Mesh& m, BoundaryKind k) {
    BoundaryCondition bc;
    for (const auto& t : boundary_tags(m)) bc.kind[t] = k;
    return bc;
  }
  BoundaryCondition& set(const std::string& tag, BoundaryKind k) {
    kind[tag] = k;
    return *this;
  }
};

struct SolverOptions {
  std::uint64_t seed = 20240521;
  double tol = 1e-8;
  int max_iter = 500;
  int extra_vectors = 8;  ///< block size is max(2k, k + extra_vectors)
};

struct EigenResult {
  std::vector<double> eigenvalues;  ///< ascending
  Eigen::MatrixXd eigenvectors;     ///< one column per pair on all dofs, M-orthonormal, zero on Dirichlet dofs
  std::vector<double> residuals;    ///< ||K v - lambda M v|| / (|lambda| ||M v||)
  int iterations = 0;
};

namespace detail {

inline SparseMatrix restrict_matrix(const SparseMatrix& A, const std::vector<int>& free_index, int n_free) {
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(static_cast<std::size_t>(A.nonZeros()));
  for (int c = 0; c < A.outerSize(); ++c)
    for (SparseMatrix::InnerIterator it(A, c); it; ++it) {
      const int r = free_index[static_cast<std::size_t>(it.row())];
      const int cc = free_index[static_cast<std::size_t>(it.col())];
      if (r >= 0 && cc >= 0) t.emplace_back(r, cc, it.value());
    }
  SparseMatrix out(n_free, n_free);
  out.setFromTriplets(t.begin(), t.end());
  return out;
}

/// `floor` keeps the measure meaningful for (near) zero eigenvalues.
inline double relative_residual(const SparseMatrix& K, const SparseMatrix& M, const Eigen::VectorXd& v, double lambda,
                                double floor) {
  const Eigen::VectorXd Mv = M * v;
  const Eigen::VectorXd r = K * v - lambda * Mv;
  const double scale = std::max({std::abs(lambda), floor, 1e-300}) * Mv.norm();
  return r.norm() / scale;
}

inline double norm1(const SparseMatrix& A) {
  double best = 0.0;
  for (int c = 0; c < A.outerSize(); ++c) {
    double col = 0.0;
    for (SparseMatrix::InnerIterator it(A, c); it; ++it) col += std::abs(it.value());
    best = std::max(best, col);
  }
  return best;
}

/// Relative residual within tol, or at the level rounding in K v alone
/// produces (which dominates for very small eigenvalues of stiff meshes).
inline bool accepted(const SparseMatrix& K, const SparseMatrix& M, const Eigen::VectorXd& v, double lambda,
                     double floor, double normK, double normM, double tol) {
  const Eigen::VectorXd Mv = M * v;
  const double r = (K * v - lambda * Mv).norm();
  constexpr double u = std::numeric_limits<double>::epsilon();
  const double roundoff = 64.0 * u * (normK + std::abs(lambda) * normM) * v.norm();
  return r <= tol * std::max({std::abs(lambda), floor, 1e-300}) * Mv.norm() + roundoff;
}

}  // namespace detail

/// Free-node count after Dirichlet elimination.
inline std::vector<int> free_dof_index(const SparsePair& sp, const BoundaryCondition& bc, int* n_free) {
  std::vector<int> index(static_cast<std::size_t>(sp.dofs.n_dofs), 0);
  for (const auto& [tag, dofs] : sp.boundary_dofs) {
    auto it = bc.kind.find(tag);
    if (it == bc.kind.end()) throw ValidationError("boundary condition missing for tag '" + tag + "'");
    if (it->second == BoundaryKind::Dirichlet)
      for (int d : dofs) index[static_cast<std::size_t>(d)] = -1;
  }
  int n = 0;
  for (int& i : index)
    if (i == 0) i = n++;
  *n_free = n;
  return index;
}

inline EigenResult solve_smallest(const SparsePair& sp, const BoundaryCondition& bc, int k,
                                  const SolverOptions& opt = {}) {
  if (k < 1) throw ValidationError("solve_smallest: k must be at least 1");
  int n = 0;
  const auto free_index = free_dof_index(sp, bc, &n);
  if (n < k)
    throw ValidationError("solve_smallest: only " + std::to_string(n) + " free dofs for " + std::to_string(k) +
                          " eigenpairs");
  const bool has_dirichlet = n < sp.dofs.n_dofs;
  const SparseMatrix K = detail::restrict_matrix(sp.K, free_index, n);
  const SparseMatrix M = detail::restrict_matrix(sp.M, free_index, n);

  EigenResult res;
  double sigma = 0.0;
  Eigen::MatrixXd X;
  Eigen::VectorXd theta;

  if (n <= 200) {
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es{Eigen::MatrixXd(K), Eigen::MatrixXd(M)};
    if (es.info() != Eigen::Success) throw NumericalError("dense generalized eigensolve failed");
    theta = es.eigenvalues();
    X = es.eigenvectors();
  } else {
    // Pure Neumann problems have a kernel; shift below it.
    if (!has_dirichlet) sigma = -1e-2 * (K.diagonal().array() / M.diagonal().array()).mean();
    const SparseMatrix A = K - sigma * M;
    Eigen::SimplicialLDLT<SparseMatrix, Eigen::Lower, Eigen::AMDOrdering<int>> ldlt(A);
    if (ldlt.info() != Eigen::Success) throw NumericalError("sparse LDLT factorization failed");
    if ((ldlt.vectorD().array() <= 0.0).any()) throw NumericalError("shifted operator is not positive definite");

    const double normK = detail::norm1(K), normM = detail::norm1(M);
    const int p = std::min(n, std::max(2 * k, k + opt.extra_vectors));
    std::mt19937_64 rng(opt.seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    X.resize(n, p);
    for (int j = 0; j < p; ++j)
      for (int i = 0; i < n; ++i) X(i, j) = u(rng);

    bool converged = false;
    for (int it = 1; it <= opt.max_iter; ++it) {
      Eigen::MatrixXd Y = ldlt.solve(M * X);
      Eigen::HouseholderQR<Eigen::MatrixXd> qr(Y);
      const Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(n, p);
      const Eigen::MatrixXd Kr = Q.transpose() * (K * Q);
      const Eigen::MatrixXd Mr = Q.transpose() * (M * Q);
      Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (Kr + Kr.transpose()),
                                                                   0.5 * (Mr + Mr.transpose()));
      if (es.info() != Eigen::Success) throw NumericalError("Rayleigh-Ritz step failed");
      theta = es.eigenvalues();
      X = Q * es.eigenvectors();
      res.iterations = it;
      converged = true;
      for (int j = 0; j < k && converged; ++j)
        converged = detail::accepted(K, M, X.col(j), theta(j), std::abs(sigma), normK, normM, opt.tol);
      if (converged) break;
    }
    if (!converged)
      throw ConvergenceFailure("subspace iteration did not reach tolerance " + std::to_string(opt.tol) + " in " +
                               std::to_string(opt.max_iter) + " iterations");
  }

  res.eigenvectors = Eigen::MatrixXd::Zero(sp.dofs.n_dofs, k);
  for (int j = 0; j < k; ++j) {
    res.eigenvalues.push_back(theta(j));
    res.residuals.push_back(detail::relative_residual(K, M, X.col(j), theta(j), std::abs(sigma)));
    for (int d = 0; d < sp.dofs.n_dofs; ++d) {
      const int f = free_index[static_cast<std::size_t>(d)];
      if (f >= 0) res.eigenvectors(d, j) = X(f, j);
    }
  }
  return res;
}

}  // namespace prescribe::fem
