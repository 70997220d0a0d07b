/**
 * @file propagators.hpp
 * @brief Stochastic exponential one-step scheme used as coarse and fine
 *        propagator, and the sequential reference solve.
 *
 * One step of size h from t_n:
 *   u_{n+1} = Ŝ(h)·[u_n + h·F(t_n, u_n) + B·ΔW_n]
 * which is the three-term exponential scheme with Ŝ(h) factored out.
 */
#ifndef PARAWELL_PROPAGATORS_HPP
#define PARAWELL_PROPAGATORS_HPP

#include "parawell/maxwell_operator.hpp"
#include "parawell/qwiener.hpp"

#include <cmath>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace parawell {

/// Built-in drifts. The affine test drift F(t,u) = rate·u + offset is
/// globally Lipschitz with constant |rate| and only exists to exercise the
/// drift term of the scheme; the physical experiments are drift-free.
class Drift {
 public:
  enum class Kind { Zero, AffineTest };

  static Drift zero() { return Drift(Kind::Zero, 0.0, 0.0); }
  static Drift affine_test(double rate, double offset = 0.0) {
    return Drift(Kind::AffineTest, rate, offset);
  }

  Kind kind() const noexcept { return kind_; }
  bool is_zero() const noexcept { return kind_ == Kind::Zero || (rate_ == 0.0 && offset_ == 0.0); }
  double rate() const noexcept { return rate_; }
  double offset() const noexcept { return offset_; }
  double lipschitz_constant() const noexcept { return std::abs(rate_); }
  std::string name() const;

  FieldState evaluate(double t, const FieldState& u) const;
  /// out += scale·F(t, u)
  void add_scaled(double t, const FieldState& u, double scale, FieldState& out) const;

 private:
  Drift(Kind kind, double rate, double offset) : kind_(kind), rate_(rate), offset_(offset) {}

  Kind kind_;
  double rate_;
  double offset_;
};

struct PropagatorConfig {
  std::shared_ptr<const MaxwellOperator> op;
  std::shared_ptr<const NoiseInjector> noise;
  Drift drift = Drift::zero();
  double dt = 0.0;

  /// Throws DomainError (dt, missing parts) or GridMismatch.
  void validate() const;
};

PropagatorConfig make_propagator(std::shared_ptr<const MaxwellOperator> op,
                                 std::shared_ptr<const NoiseInjector> noise, double dt,
                                 Drift drift = Drift::zero());

struct Trajectory {
  enum class Provenance { Coarse, Reference, Parareal };

  std::vector<FieldState> states;  // t_0 .. t_N
  Provenance provenance = Provenance::Reference;
  int iteration = 0;  // meaningful for Parareal
};

FieldState exponential_step(const PropagatorConfig& cfg, double t_n, const FieldState& u,
                            std::span<const double> dW);

/// 𝒢 on subinterval n (1..N) with the aggregated increment.
FieldState coarse_step(const PropagatorConfig& coarse, int n, const FieldState& u,
                       const WienerPath& path);

/// ℱ on subinterval n: J exponential steps with the stored fine increments.
FieldState fine_sweep(const PropagatorConfig& fine, int n, const FieldState& u_start,
                      const WienerPath& path);

/// Sequential fine trajectory at the coarse times.
Trajectory reference_solve(const PropagatorConfig& fine, const FieldState& u0,
                           const WienerPath& path);

/// Sequential coarse trajectory (the parareal initialization).
Trajectory coarse_solve(const PropagatorConfig& coarse, const FieldState& u0,
                        const WienerPath& path);

}  // namespace parawell

#endif  // PARAWELL_PROPAGATORS_HPP
