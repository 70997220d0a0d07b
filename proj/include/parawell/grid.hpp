/**
 * @file grid.hpp
 * @brief Uniform PEC grids, electromagnetic field states and the
 *        ε/μ-weighted inner product.
 *
 * Unknowns live on interior nodes only: x_i = (i+1)·dx, i = 0..nx-1, with
 * dx = extent_x/(nx+1). Boundary values of E_z are identically zero and are
 * never stored. A 1D state holds [E_z, H_y]; a 2D TM state holds
 * [E_z, H_x, H_y]. Components are stored one after another, and inside a
 * component the index is j·nx + i (row j = y, column i = x).
 */
#ifndef PARAWELL_GRID_HPP
#define PARAWELL_GRID_HPP

#include <Eigen/Dense>

#include <iosfwd>
#include <memory>
#include <string_view>

namespace parawell {

class Grid {
 public:
  static Grid line(double extent_x, int nx, double epsilon = 1.0, double mu = 1.0);
  static Grid plane(double extent_x, double extent_y, int nx, int ny, double epsilon = 1.0,
                    double mu = 1.0);

  int dimension() const noexcept { return dimension_; }
  int nx() const noexcept { return nx_; }
  /// 1 for a 1D grid.
  int ny() const noexcept { return ny_; }
  double extent_x() const noexcept { return extent_x_; }
  double extent_y() const noexcept { return extent_y_; }
  double dx() const noexcept { return dx_; }
  double dy() const noexcept { return dy_; }
  double epsilon() const noexcept { return epsilon_; }
  double mu() const noexcept { return mu_; }

  /// Rectangle-rule quadrature weight: dx in 1D, dx·dy in 2D.
  double cell_volume() const noexcept { return dimension_ == 1 ? dx_ : dx_ * dy_; }

  int points() const noexcept { return nx_ * ny_; }
  int components() const noexcept { return dimension_ == 1 ? 2 : 3; }
  Eigen::Index size() const noexcept { return Eigen::Index{components()} * points(); }

  /// Component 0 is always E_z; the rest are magnetic.
  static constexpr bool is_electric(int component) noexcept { return component == 0; }
  std::string_view component_name(int component) const;

  double x(int i) const noexcept { return (i + 1) * dx_; }
  double y(int j) const noexcept { return dimension_ == 1 ? 0.0 : (j + 1) * dy_; }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  Grid() = default;

  int dimension_ = 1;
  int nx_ = 0;
  int ny_ = 1;
  double extent_x_ = 0.0;
  double extent_y_ = 0.0;
  double dx_ = 0.0;
  double dy_ = 1.0;
  double epsilon_ = 1.0;
  double mu_ = 1.0;
};

using GridPtr = std::shared_ptr<const Grid>;

inline GridPtr share(Grid grid) { return std::make_shared<const Grid>(std::move(grid)); }

/// Value-type field state on a shared, immutable grid.
class FieldState {
 public:
  explicit FieldState(GridPtr grid);
  FieldState(GridPtr grid, Eigen::VectorXd values);

  const Grid& grid() const noexcept { return *grid_; }
  const GridPtr& grid_ptr() const noexcept { return grid_; }

  const Eigen::VectorXd& values() const noexcept { return values_; }
  Eigen::VectorXd& values() noexcept { return values_; }

  auto component(int c) { return values_.segment(Eigen::Index{c} * grid_->points(), grid_->points()); }
  auto component(int c) const {
    return values_.segment(Eigen::Index{c} * grid_->points(), grid_->points());
  }

  double& at(int component, int i, int j = 0) {
    return values_[Eigen::Index{component} * grid_->points() + Eigen::Index{j} * grid_->nx() + i];
  }
  double at(int component, int i, int j = 0) const {
    return values_[Eigen::Index{component} * grid_->points() + Eigen::Index{j} * grid_->nx() + i];
  }

  bool all_finite() const { return values_.allFinite(); }

  /// Same grid object or an equal grid.
  bool same_grid(const FieldState& other) const noexcept {
    return grid_ == other.grid_ || *grid_ == *other.grid_;
  }

  FieldState& operator+=(const FieldState& rhs);
  FieldState& operator-=(const FieldState& rhs);
  FieldState& operator*=(double scale);

  friend FieldState operator+(FieldState lhs, const FieldState& rhs) { return lhs += rhs; }
  friend FieldState operator-(FieldState lhs, const FieldState& rhs) { return lhs -= rhs; }
  friend FieldState operator*(double scale, FieldState rhs) { return rhs *= scale; }

  /// Bitwise equality of the stored values (and grid equality).
  friend bool operator==(const FieldState& a, const FieldState& b);

 private:
  GridPtr grid_;
  Eigen::VectorXd values_;
};

/// dx(·dy)·Σ [ε·E_a·E_b + μ·H_a·H_b]. Throws GridMismatch.
double weighted_inner(const FieldState& a, const FieldState& b);
double weighted_norm(const FieldState& a);

/// Writes x[,y],component,value rows (with header).
void write_snapshot_csv(std::ostream& out, const FieldState& state);

}  // namespace parawell

#endif  // PARAWELL_GRID_HPP
