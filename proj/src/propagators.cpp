#include "parawell/propagators.hpp"

#include "parawell/errors.hpp"

#include <cmath>
#include <sstream>

namespace parawell {

namespace {

bool same_step(double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(std::abs(a), std::abs(b)); }

void check_coarse_mesh(const PropagatorConfig& coarse, const WienerPath& path) {
  if (!same_step(coarse.dt, path.dt_fine() * path.n_fine_per_coarse())) {
    throw MeshError("coarse step does not equal J·dt of the Wiener path");
  }
}

void check_fine_mesh(const PropagatorConfig& fine, const WienerPath& path) {
  if (!same_step(fine.dt, path.dt_fine())) {
    throw MeshError("fine step does not match the Wiener path");
  }
}

}  // namespace

std::string Drift::name() const {
  if (kind_ == Kind::Zero) return "zero";
  std::ostringstream s;
  s << "affine_test(rate=" << rate_ << ",offset=" << offset_ << ")";
  return s.str();
}

FieldState Drift::evaluate(double t, const FieldState& u) const {
  FieldState out(u.grid_ptr());
  add_scaled(t, u, 1.0, out);
  return out;
}

void Drift::add_scaled(double /*t*/, const FieldState& u, double scale, FieldState& out) const {
  if (is_zero()) return;
  out.values().array() += scale * (rate_ * u.values().array() + offset_);
}

void PropagatorConfig::validate() const {
  if (!op) throw DomainError("propagator needs an operator");
  if (!noise) throw DomainError("propagator needs a noise injector");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw DomainError("propagator step must be > 0");
  if (!(op->grid() == *noise->grid_ptr())) {
    throw GridMismatch("operator and noise injector live on different grids");
  }
}

PropagatorConfig make_propagator(std::shared_ptr<const MaxwellOperator> op,
                                 std::shared_ptr<const NoiseInjector> noise, double dt,
                                 Drift drift) {
  PropagatorConfig cfg{std::move(op), std::move(noise), drift, dt};
  cfg.validate();
  return cfg;
}

FieldState exponential_step(const PropagatorConfig& cfg, double t_n, const FieldState& u,
                            std::span<const double> dW) {
  FieldState v = u;
  cfg.drift.add_scaled(t_n, u, cfg.dt, v);
  cfg.noise->add_to(v, dW);
  return cfg.op->apply_semigroup(cfg.dt, v);
}

FieldState coarse_step(const PropagatorConfig& coarse, int n, const FieldState& u,
                       const WienerPath& path) {
  check_coarse_mesh(coarse, path);
  const std::vector<double> dW = coarse_increment(path, n);
  return exponential_step(coarse, (n - 1) * coarse.dt, u, dW);
}

FieldState fine_sweep(const PropagatorConfig& fine, int n, const FieldState& u_start,
                      const WienerPath& path) {
  check_fine_mesh(fine, path);
  if (n < 1 || n > path.n_coarse()) throw IndexError("fine_sweep: subinterval out of range");
  const int steps = path.n_fine_per_coarse();
  const double t_start = (n - 1) * steps * fine.dt;
  FieldState u = u_start;
  for (int j = 1; j <= steps; ++j) {
    u = exponential_step(fine, t_start + (j - 1) * fine.dt, u, path.fine_increment(n, j));
  }
  return u;
}

Trajectory reference_solve(const PropagatorConfig& fine, const FieldState& u0,
                           const WienerPath& path) {
  Trajectory out;
  out.provenance = Trajectory::Provenance::Reference;
  out.states.reserve(static_cast<std::size_t>(path.n_coarse()) + 1);
  out.states.push_back(u0);
  for (int n = 1; n <= path.n_coarse(); ++n) {
    out.states.push_back(fine_sweep(fine, n, out.states.back(), path));
  }
  return out;
}

Trajectory coarse_solve(const PropagatorConfig& coarse, const FieldState& u0,
                        const WienerPath& path) {
  Trajectory out;
  out.provenance = Trajectory::Provenance::Coarse;
  out.states.reserve(static_cast<std::size_t>(path.n_coarse()) + 1);
  out.states.push_back(u0);
  for (int n = 1; n <= path.n_coarse(); ++n) {
    out.states.push_back(coarse_step(coarse, n, out.states.back(), path));
  }
  return out;
}

}  // namespace parawell
