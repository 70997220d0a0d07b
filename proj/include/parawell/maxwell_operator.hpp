/**
 * @file maxwell_operator.hpp
 * @brief Finite-difference Maxwell curl operator and its damped semigroup.
 *
 * The assembled matrix A is skew-adjoint in the ε/μ-weighted inner product,
 * so exp(tA) is an isometry and the damped flow
 *   Ŝ(t) = exp(t(A - σI)) = exp(-σt)·exp(tA)
 * is a contraction. The damping factor is applied as an exact scalar; only
 * exp(tA)·u goes through the configured strategy.
 *
 * Sign conventions (1D):  dE_z/dt = (1/ε) dH_y/dx,  dH_y/dt = (1/μ) dE_z/dx.
 * 2D TM:  dE_z/dt = (1/ε)(dH_y/dx - dH_x/dy),
 *         dH_x/dt = -(1/μ) dE_z/dy,  dH_y/dt = (1/μ) dE_z/dx.
 */
#ifndef PARAWELL_MAXWELL_OPERATOR_HPP
#define PARAWELL_MAXWELL_OPERATOR_HPP

#include "parawell/grid.hpp"
#include "parawell/krylov.hpp"

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <variant>
#include <vector>

namespace parawell {

/// Precomputed dense exponentials, keyed by step length.
struct DenseExp {};

struct KrylovExpmv {
  KrylovOptions options;
};

using SemigroupStrategy = std::variant<DenseExp, KrylovExpmv>;

struct SemigroupOptions {
  /// Unset: dense when the flat dimension is <= kDenseLimit, Krylov otherwise.
  std::optional<SemigroupStrategy> strategy;
  /// Step lengths whose dense exponentials are built at assembly time.
  std::vector<double> cached_steps;
  KrylovOptions krylov;
};

class MaxwellOperator {
 public:
  static constexpr Eigen::Index kDenseLimit = 1024;

  MaxwellOperator(GridPtr grid, SparseMatrix matrix, double sigma, const SemigroupOptions& options);

  const Grid& grid() const noexcept { return *shared_->grid; }
  const GridPtr& grid_ptr() const noexcept { return shared_->grid; }
  const SparseMatrix& matrix() const noexcept { return shared_->matrix; }
  double sigma() const noexcept { return sigma_; }
  const SemigroupStrategy& strategy() const noexcept { return shared_->strategy; }
  bool is_dense() const noexcept { return std::holds_alternative<DenseExp>(shared_->strategy); }

  /// Same matrix, strategy and exponential cache with a different damping.
  MaxwellOperator with_sigma(double sigma) const;

  /// M·u (undamped).
  FieldState apply(const FieldState& u) const;

  /// Ŝ(t)·u. Throws DomainError for t < 0, ConvergenceError from Krylov.
  FieldState apply_semigroup(double t, const FieldState& u) const;

  bool has_cached_step(double t) const { return shared_->dense_cache.contains(t); }

  void write_matrix_market(const std::filesystem::path& path) const;

 private:
  struct Shared {
    GridPtr grid;
    SparseMatrix matrix;
    SemigroupStrategy strategy;
    std::map<double, Eigen::MatrixXd> dense_cache;
  };

  MaxwellOperator(std::shared_ptr<const Shared> shared, double sigma);

  std::shared_ptr<const Shared> shared_;
  double sigma_ = 0.0;
};

/// (Mu)_E = (1/ε)·D H_y, (Mu)_H = (1/μ)·D E_z with D the central difference
/// and zero ghost values at both ends. Throws DimensionError on a 2D grid.
MaxwellOperator assemble_1d(GridPtr grid, double sigma = 0.0, const SemigroupOptions& options = {});

/// Three-field TM coupling with central differences. Throws DimensionError on a 1D grid.
MaxwellOperator assemble_2d_tm(GridPtr grid, double sigma = 0.0,
                               const SemigroupOptions& options = {});

/// Dispatches on the grid dimension.
MaxwellOperator assemble(GridPtr grid, double sigma = 0.0, const SemigroupOptions& options = {});

inline FieldState apply_semigroup(const MaxwellOperator& op, double t, const FieldState& u) {
  return op.apply_semigroup(t, u);
}

}  // namespace parawell

#endif  // PARAWELL_MAXWELL_OPERATOR_HPP
