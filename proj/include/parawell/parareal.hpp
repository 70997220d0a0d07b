/**
 * @file parareal.hpp
 * @brief Parareal iteration, Monte Carlo error curves and the theoretical
 *        bound envelope.
 *
 *   u_n^{(0)}   = 𝒢(u_{n-1}^{(0)})
 *   u_n^{(k+1)} = ℱ(u_{n-1}^{(k)}) + [𝒢(u_{n-1}^{(k+1)}) - 𝒢(u_{n-1}^{(k)})]
 *   u_0^{(k)}   = u_0
 *
 * The fine sweeps of one iteration are independent and run as an OpenMP
 * loop over subintervals (Schedule::Parallel) or as a plain loop
 * (Schedule::Serial, the reference schedule). Both give bitwise identical
 * iterates. A sweep is skipped when its start state is bitwise equal to the
 * one of the previous iteration, and the bracketed coarse difference is then
 * exactly zero, so u_n^{(k)} equals the reference bitwise for k >= n.
 */
#ifndef PARAWELL_PARAREAL_HPP
#define PARAWELL_PARAREAL_HPP

#include "parawell/propagators.hpp"

#include <optional>
#include <span>
#include <vector>

namespace parawell {

enum class Schedule { Serial, Parallel };

struct PararealOptions {
  int iterations = 12;  // K
  Schedule schedule = Schedule::Parallel;
  /// Keep every iterate u^{(k)}; otherwise only the last one.
  bool keep_iterates = false;
  /// Stop early once max_n ‖u_n^{(k+1)} - u_n^{(k)}‖ < stop_tolerance.
  std::optional<double> stop_tolerance;
};

struct ParaRealRun {
  std::vector<std::vector<FieldState>> iterates;  // [k][n] or just the last
  Trajectory reference;
  int iterations = 0;  // performed iterations (K unless stopped early)
  int fine_sweeps = 0;
  /// ‖u_n^{(k)} - u_n^{ref}‖² for k = 0..iterations, n = 0..N.
  std::vector<std::vector<double>> squared_errors;

  const std::vector<FieldState>& final_iterate() const { return iterates.back(); }
  /// sqrt(sup_n squared_errors[k][n]).
  double error(int k) const;
};

/// Throws MeshError when the coarse step is not J·dt of the path, DomainError
/// for K < 0. `reference` may be supplied to avoid recomputing it.
ParaRealRun parareal_solve(const PropagatorConfig& coarse, const PropagatorConfig& fine,
                           const FieldState& u0, const WienerPath& path,
                           const PararealOptions& options = {},
                           const Trajectory* reference = nullptr);

/// sqrt(sup_n mean_samples ‖u_n^{(k)} - u_n^{ref}‖²) for each k.
/// Runs must share N and the iteration count; throws EmptyInput, MeshError.
std::vector<double> iteration_errors(std::span<const ParaRealRun> runs);

/// Streaming form of iteration_errors over per-sample squared errors.
class ErrorAccumulator {
 public:
  /// Samples must be added in a fixed order for reproducible sums.
  void add(const std::vector<std::vector<double>>& squared_errors);
  int samples() const noexcept { return samples_; }
  std::vector<double> curve() const;

 private:
  std::vector<std::vector<double>> sums_;
  int samples_ = 0;
};

/// (1/k!)·ΔT^k·Π_{j=1}^{k}(N - j), the bound shape with unit constant.
/// Throws DomainError for k < 0 or k >= N.
double bound_envelope(int k, int n_coarse, double coarse_step);

}  // namespace parawell

#endif  // PARAWELL_PARAREAL_HPP
