#include "parawell/maxwell_operator.hpp"

#include "parawell/errors.hpp"

#include <unsupported/Eigen/MatrixFunctions>
#include <unsupported/Eigen/SparseExtra>

#include <cmath>

namespace parawell {

namespace {

using Triplet = Eigen::Triplet<double>;

/// Central difference along x (or y) of one component block, zero ghosts.
/// Writes scale·(f[+1] - f[-1])/(2h) into rows [row_block] from columns [col_block].
void add_central_x(std::vector<Triplet>& t, const Grid& g, Eigen::Index row_block,
                   Eigen::Index col_block, double scale) {
  const double c = scale / (2.0 * g.dx());
  for (int j = 0; j < g.ny(); ++j) {
    for (int i = 0; i < g.nx(); ++i) {
      const Eigen::Index row = row_block + Eigen::Index{j} * g.nx() + i;
      if (i + 1 < g.nx()) t.emplace_back(row, col_block + Eigen::Index{j} * g.nx() + i + 1, c);
      if (i > 0) t.emplace_back(row, col_block + Eigen::Index{j} * g.nx() + i - 1, -c);
    }
  }
}

void add_central_y(std::vector<Triplet>& t, const Grid& g, Eigen::Index row_block,
                   Eigen::Index col_block, double scale) {
  const double c = scale / (2.0 * g.dy());
  for (int j = 0; j < g.ny(); ++j) {
    for (int i = 0; i < g.nx(); ++i) {
      const Eigen::Index row = row_block + Eigen::Index{j} * g.nx() + i;
      if (j + 1 < g.ny()) t.emplace_back(row, col_block + Eigen::Index{j + 1} * g.nx() + i, c);
      if (j > 0) t.emplace_back(row, col_block + Eigen::Index{j - 1} * g.nx() + i, -c);
    }
  }
}

SparseMatrix from_triplets(Eigen::Index n, const std::vector<Triplet>& t) {
  SparseMatrix m(n, n);
  m.setFromTriplets(t.begin(), t.end());
  m.makeCompressed();
  return m;
}

void check_sigma(double sigma) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw DomainError("sigma must be >= 0");
}

}  // namespace

MaxwellOperator::MaxwellOperator(GridPtr grid, SparseMatrix matrix, double sigma,
                                 const SemigroupOptions& options)
    : sigma_(sigma) {
  check_sigma(sigma);
  if (matrix.rows() != grid->size() || matrix.cols() != grid->size()) {
    throw DimensionError("operator matrix does not match the grid");
  }
  auto shared = std::make_shared<Shared>();
  shared->grid = std::move(grid);
  shared->matrix = std::move(matrix);
  if (options.strategy) {
    shared->strategy = *options.strategy;
  } else if (shared->matrix.rows() <= kDenseLimit) {
    shared->strategy = DenseExp{};
  } else {
    shared->strategy = KrylovExpmv{options.krylov};
  }
  if (std::holds_alternative<DenseExp>(shared->strategy)) {
    const Eigen::MatrixXd dense(shared->matrix);
    for (double t : options.cached_steps) {
      if (t < 0.0) throw DomainError("cached step must be >= 0");
      if (!shared->dense_cache.contains(t)) shared->dense_cache.emplace(t, (t * dense).exp());
    }
  }
  shared_ = std::move(shared);
}

MaxwellOperator::MaxwellOperator(std::shared_ptr<const Shared> shared, double sigma)
    : shared_(std::move(shared)), sigma_(sigma) {
  check_sigma(sigma);
}

MaxwellOperator MaxwellOperator::with_sigma(double sigma) const { return {shared_, sigma}; }

FieldState MaxwellOperator::apply(const FieldState& u) const {
  if (!(u.grid() == grid())) throw GridMismatch("state and operator live on different grids");
  return FieldState(u.grid_ptr(), shared_->matrix * u.values());
}

FieldState MaxwellOperator::apply_semigroup(double t, const FieldState& u) const {
  if (!(t >= 0.0)) throw DomainError("apply_semigroup: t must be >= 0");
  if (!(u.grid() == grid())) throw GridMismatch("state and operator live on different grids");
  if (t == 0.0) return u;

  const double damping = std::exp(-sigma_ * t);
  Eigen::VectorXd out;
  if (const auto* krylov = std::get_if<KrylovExpmv>(&shared_->strategy)) {
    out = krylov_expmv(shared_->matrix, t, u.values(), krylov->options);
  } else if (auto it = shared_->dense_cache.find(t); it != shared_->dense_cache.end()) {
    out.noalias() = it->second * u.values();
  } else {
    const Eigen::MatrixXd dense(shared_->matrix);
    out.noalias() = (t * dense).exp() * u.values();
  }
  out *= damping;
  if (!out.allFinite()) throw NonFiniteError("apply_semigroup produced non-finite values");
  return FieldState(u.grid_ptr(), std::move(out));
}

void MaxwellOperator::write_matrix_market(const std::filesystem::path& path) const {
  if (!Eigen::saveMarket(shared_->matrix, path.string())) {
    throw IoError("cannot write matrix market file " + path.string());
  }
}

MaxwellOperator assemble_1d(GridPtr grid, double sigma, const SemigroupOptions& options) {
  if (grid->dimension() != 1) throw DimensionError("assemble_1d needs a 1D grid");
  const Grid& g = *grid;
  const Eigen::Index p = g.points();
  std::vector<Triplet> t;
  t.reserve(static_cast<std::size_t>(4 * p));
  add_central_x(t, g, 0, p, 1.0 / g.epsilon());  // E_z <- H_y
  add_central_x(t, g, p, 0, 1.0 / g.mu());       // H_y <- E_z
  return MaxwellOperator(std::move(grid), from_triplets(2 * p, t), sigma, options);
}

MaxwellOperator assemble_2d_tm(GridPtr grid, double sigma, const SemigroupOptions& options) {
  if (grid->dimension() != 2) throw DimensionError("assemble_2d_tm needs a 2D grid");
  const Grid& g = *grid;
  const Eigen::Index p = g.points();
  const Eigen::Index ez = 0, hx = p, hy = 2 * p;
  std::vector<Triplet> t;
  t.reserve(static_cast<std::size_t>(8 * p));
  add_central_x(t, g, ez, hy, 1.0 / g.epsilon());
  add_central_y(t, g, ez, hx, -1.0 / g.epsilon());
  add_central_y(t, g, hx, ez, -1.0 / g.mu());
  add_central_x(t, g, hy, ez, 1.0 / g.mu());
  return MaxwellOperator(std::move(grid), from_triplets(3 * p, t), sigma, options);
}

MaxwellOperator assemble(GridPtr grid, double sigma, const SemigroupOptions& options) {
  return grid->dimension() == 1 ? assemble_1d(std::move(grid), sigma, options)
                                : assemble_2d_tm(std::move(grid), sigma, options);
}

}  // namespace parawell
