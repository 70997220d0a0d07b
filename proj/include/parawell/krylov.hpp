/**
 * @file krylov.hpp
 * @brief Arnoldi approximation of exp(tA)·v for large sparse A.
 *
 * The subspace grows until the a-posteriori estimate
 *   β·h_{j+1,j}·τ·|e_j^T φ₁(τH_j) e₁|
 * drops below the tolerance. If the full subspace is not enough for the
 * remaining interval, the step τ is halved until it is, and the cycle
 * restarts from the propagated vector on what is left of [0, t].
 */
#ifndef PARAWELL_KRYLOV_HPP
#define PARAWELL_KRYLOV_HPP

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace parawell {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

struct KrylovOptions {
  int subspace_dim = 30;
  /// Relative to ‖v‖ over the whole interval.
  double tol = 1e-10;
  int max_restarts = 1;
};

struct KrylovStats {
  int cycles = 0;
  int matvecs = 0;
  double error_estimate = 0.0;
  bool happy_breakdown = false;
};

/// Throws ConvergenceError when [0, t] is not covered within 1 + max_restarts cycles.
Eigen::VectorXd krylov_expmv(const SparseMatrix& a, double t, const Eigen::VectorXd& v,
                             const KrylovOptions& options = {}, KrylovStats* stats = nullptr);

}  // namespace parawell

#endif  // PARAWELL_KRYLOV_HPP
