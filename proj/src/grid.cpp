#include "parawell/grid.hpp"

#include "parawell/errors.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <ostream>
#include <string>

namespace parawell {

namespace {

void check_material(double epsilon, double mu) {
  if (!(epsilon > 0.0) || !(mu > 0.0) || !std::isfinite(epsilon) || !std::isfinite(mu)) {
    throw DomainError("epsilon and mu must be positive and finite");
  }
}

void check_axis(double extent, int n, const char* axis) {
  if (n < 2) {
    throw DomainError(std::string("grid needs at least 2 interior points along ") + axis);
  }
  if (!(extent > 0.0) || !std::isfinite(extent)) {
    throw DomainError(std::string("extent along ") + axis + " must be positive");
  }
}

void require_same_grid(const FieldState& a, const FieldState& b) {
  if (!a.same_grid(b)) {
    throw GridMismatch("field states live on different grids");
  }
}

}  // namespace

Grid Grid::line(double extent_x, int nx, double epsilon, double mu) {
  check_axis(extent_x, nx, "x");
  check_material(epsilon, mu);
  Grid g;
  g.dimension_ = 1;
  g.nx_ = nx;
  g.ny_ = 1;
  g.extent_x_ = extent_x;
  g.dx_ = extent_x / (nx + 1);
  g.epsilon_ = epsilon;
  g.mu_ = mu;
  return g;
}

Grid Grid::plane(double extent_x, double extent_y, int nx, int ny, double epsilon, double mu) {
  check_axis(extent_x, nx, "x");
  check_axis(extent_y, ny, "y");
  check_material(epsilon, mu);
  Grid g;
  g.dimension_ = 2;
  g.nx_ = nx;
  g.ny_ = ny;
  g.extent_x_ = extent_x;
  g.extent_y_ = extent_y;
  g.dx_ = extent_x / (nx + 1);
  g.dy_ = extent_y / (ny + 1);
  g.epsilon_ = epsilon;
  g.mu_ = mu;
  return g;
}

std::string_view Grid::component_name(int component) const {
  if (component == 0) return "Ez";
  if (dimension_ == 1) {
    if (component == 1) return "Hy";
  } else {
    if (component == 1) return "Hx";
    if (component == 2) return "Hy";
  }
  throw IndexError("component index out of range");
}

FieldState::FieldState(GridPtr grid) : grid_(std::move(grid)) {
  values_ = Eigen::VectorXd::Zero(grid_->size());
}

FieldState::FieldState(GridPtr grid, Eigen::VectorXd values)
    : grid_(std::move(grid)), values_(std::move(values)) {
  if (values_.size() != grid_->size()) {
    throw DimensionError("value vector length does not match the grid");
  }
}

FieldState& FieldState::operator+=(const FieldState& rhs) {
  require_same_grid(*this, rhs);
  values_ += rhs.values_;
  return *this;
}

FieldState& FieldState::operator-=(const FieldState& rhs) {
  require_same_grid(*this, rhs);
  values_ -= rhs.values_;
  return *this;
}

FieldState& FieldState::operator*=(double scale) {
  values_ *= scale;
  return *this;
}

bool operator==(const FieldState& a, const FieldState& b) {
  if (!a.same_grid(b)) return false;
  // Exact comparison on purpose: used for bitwise reproducibility checks.
  return a.values_.size() == b.values_.size() &&
         std::equal(a.values_.data(), a.values_.data() + a.values_.size(), b.values_.data(),
                    [](double u, double v) { return std::bit_cast<std::uint64_t>(u) ==
                                                    std::bit_cast<std::uint64_t>(v); });
}

double weighted_inner(const FieldState& a, const FieldState& b) {
  require_same_grid(a, b);
  const Grid& g = a.grid();
  const double electric = a.component(0).dot(b.component(0));
  double magnetic = 0.0;
  for (int c = 1; c < g.components(); ++c) {
    magnetic += a.component(c).dot(b.component(c));
  }
  return g.cell_volume() * (g.epsilon() * electric + g.mu() * magnetic);
}

double weighted_norm(const FieldState& a) {
  return std::sqrt(std::max(0.0, weighted_inner(a, a)));
}

void write_snapshot_csv(std::ostream& out, const FieldState& state) {
  const Grid& g = state.grid();
  out << (g.dimension() == 1 ? "x,component,value\n" : "x,y,component,value\n");
  out << std::setprecision(17);
  for (int c = 0; c < g.components(); ++c) {
    for (int j = 0; j < g.ny(); ++j) {
      for (int i = 0; i < g.nx(); ++i) {
        out << g.x(i) << ',';
        if (g.dimension() == 2) out << g.y(j) << ',';
        out << g.component_name(c) << ',' << state.at(c, i, j) << '\n';
      }
    }
  }
}

}  // namespace parawell
