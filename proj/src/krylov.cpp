#include "parawell/krylov.hpp"

#include "parawell/errors.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>

namespace parawell {

namespace {

constexpr int kFirstCheck = 4;
constexpr int kCheckStride = 2;
constexpr int kMaxHalvings = 60;

struct SmallExp {
  Eigen::VectorXd coefficients;  // exp(τH) e₁
  double error = 0.0;
};

/// exp of the augmented matrix [[τH, e₁], [0, 0]] yields exp(τH)e₁ and φ₁(τH)e₁.
SmallExp small_exponential(const Eigen::MatrixXd& hessenberg, int dim, double tau, double beta,
                           double subdiagonal) {
  Eigen::MatrixXd augmented = Eigen::MatrixXd::Zero(dim + 1, dim + 1);
  augmented.topLeftCorner(dim, dim) = tau * hessenberg.topLeftCorner(dim, dim);
  augmented(0, dim) = 1.0;
  const Eigen::MatrixXd e = augmented.exp();
  SmallExp out;
  out.coefficients = e.col(0).head(dim);
  out.error = beta * subdiagonal * tau * std::abs(e(dim - 1, dim));
  return out;
}

double infinity_norm(const SparseMatrix& a) {
  double norm = 0.0;
  for (Eigen::Index r = 0; r < a.outerSize(); ++r) {
    double row = 0.0;
    for (SparseMatrix::InnerIterator it(a, r); it; ++it) row += std::abs(it.value());
    norm = std::max(norm, row);
  }
  return norm;
}

}  // namespace

Eigen::VectorXd krylov_expmv(const SparseMatrix& a, double t, const Eigen::VectorXd& v,
                             const KrylovOptions& options, KrylovStats* stats) {
  if (t < 0.0) throw DomainError("krylov_expmv: negative time");
  if (options.subspace_dim < 1) throw DomainError("krylov_expmv: subspace_dim must be >= 1");
  KrylovStats local;
  Eigen::VectorXd w = v;
  const double v_norm = v.norm();
  if (t == 0.0 || v_norm == 0.0) {
    if (stats) *stats = local;
    return w;
  }

  const Eigen::Index n = v.size();
  const int m = static_cast<int>(std::min<Eigen::Index>(options.subspace_dim, n));
  const double breakdown = 1e-13 * std::max(1.0, infinity_norm(a));
  const double tol_abs = options.tol * v_norm;

  Eigen::MatrixXd basis(n, m + 1);
  Eigen::MatrixXd hessenberg = Eigen::MatrixXd::Zero(m + 1, m);
  Eigen::VectorXd p(n);
  Eigen::VectorXd h(m + 1);

  double remaining = t;
  // Full-subspace estimate over what was left of the interval in the last cycle.
  double last_error = 0.0;
  for (int cycle = 0; cycle <= options.max_restarts; ++cycle) {
    ++local.cycles;
    const double beta = w.norm();
    if (beta == 0.0) break;
    basis.col(0) = w / beta;
    hessenberg.setZero();

    // Per-unit-time budget so that restarted cycles share the tolerance.
    const double budget_rate = tol_abs / t;
    bool done = false;
    int dim = 0;
    for (int j = 0; j < m; ++j) {
      p.noalias() = a * basis.col(j);
      ++local.matvecs;
      // Classical Gram-Schmidt, applied twice.
      auto q = basis.leftCols(j + 1);
      h.head(j + 1).noalias() = q.transpose() * p;
      p.noalias() -= q * h.head(j + 1);
      Eigen::VectorXd correction = q.transpose() * p;
      p.noalias() -= q * correction;
      hessenberg.col(j).head(j + 1) = h.head(j + 1) + correction;
      const double sub = p.norm();
      hessenberg(j + 1, j) = sub;
      dim = j + 1;

      if (sub <= breakdown) {
        // Invariant subspace: the projection is exact for any τ.
        const SmallExp s = small_exponential(hessenberg, dim, remaining, beta, 0.0);
        w.noalias() = beta * (basis.leftCols(dim) * s.coefficients);
        local.happy_breakdown = true;
        remaining = 0.0;
        done = true;
        break;
      }
      basis.col(j + 1) = p / sub;

      const bool check = dim == m || (dim >= kFirstCheck && (dim - kFirstCheck) % kCheckStride == 0);
      if (!check) continue;
      const SmallExp s = small_exponential(hessenberg, dim, remaining, beta, sub);
      last_error = s.error;
      if (s.error <= budget_rate * remaining) {
        w.noalias() = beta * (basis.leftCols(dim) * s.coefficients);
        local.error_estimate += s.error;
        remaining = 0.0;
        done = true;
        break;
      }
    }
    if (done) break;

    // Full subspace not enough for the remaining interval: shorten the step.
    const double sub = hessenberg(dim, dim - 1);
    double tau = remaining;
    SmallExp s;
    bool accepted = false;
    for (int halving = 0; halving < kMaxHalvings; ++halving) {
      tau *= 0.5;
      s = small_exponential(hessenberg, dim, tau, beta, sub);
      if (s.error <= budget_rate * tau) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      if (stats) *stats = local;
      throw ConvergenceError("krylov_expmv: step size underflow", last_error);
    }
    w.noalias() = beta * (basis.leftCols(dim) * s.coefficients);
    local.error_estimate += s.error;
    remaining -= tau;
  }

  if (stats) *stats = local;
  if (remaining > 0.0) {
    throw ConvergenceError("krylov_expmv: interval not covered within the allowed restarts",
                           last_error);
  }
  return w;
}

}  // namespace parawell
