#include "parawell/parareal.hpp"

#include "parawell/errors.hpp"

#include <algorithm>
#include <cmath>
#include <exception>

namespace parawell {

namespace {

void check_meshes(const PropagatorConfig& coarse, const PropagatorConfig& fine,
                  const WienerPath& path) {
  const double expected = fine.dt * path.n_fine_per_coarse();
  if (std::abs(coarse.dt - expected) > 1e-12 * expected) {
    throw MeshError("coarse step must equal J times the fine step");
  }
  if (std::abs(fine.dt - path.dt_fine()) > 1e-12 * fine.dt) {
    throw MeshError("fine step does not match the Wiener path");
  }
}

std::vector<double> squared_distance(const std::vector<FieldState>& iterate,
                                     const std::vector<FieldState>& reference) {
  std::vector<double> out(iterate.size());
  for (std::size_t n = 0; n < iterate.size(); ++n) {
    const FieldState diff = iterate[n] - reference[n];
    out[n] = weighted_inner(diff, diff);
  }
  return out;
}

}  // namespace

double ParaRealRun::error(int k) const {
  if (k < 0 || k >= static_cast<int>(squared_errors.size())) {
    throw IndexError("iteration index out of range");
  }
  const auto& row = squared_errors[static_cast<std::size_t>(k)];
  return std::sqrt(*std::max_element(row.begin(), row.end()));
}

ParaRealRun parareal_solve(const PropagatorConfig& coarse, const PropagatorConfig& fine,
                           const FieldState& u0, const WienerPath& path,
                           const PararealOptions& options, const Trajectory* reference) {
  if (options.iterations < 0) throw DomainError("parareal needs K >= 0");
  check_meshes(coarse, fine, path);
  const int n_coarse = path.n_coarse();
  const auto slots = static_cast<std::size_t>(n_coarse) + 1;

  ParaRealRun run;
  if (reference) {
    if (reference->states.size() != slots) throw MeshError("reference has the wrong length");
    run.reference = *reference;
  } else {
    run.reference = reference_solve(fine, u0, path);
  }

  // Initialization: pure coarse trajectory. coarse_values[n] = 𝒢(u_{n-1}^{(k)}).
  std::vector<FieldState> current(slots, u0);
  std::vector<FieldState> coarse_values(slots, u0);
  for (int n = 1; n <= n_coarse; ++n) {
    coarse_values[n] = coarse_step(coarse, n, current[n - 1], path);
    current[n] = coarse_values[n];
  }
  run.squared_errors.push_back(squared_distance(current, run.reference.states));
  if (options.keep_iterates) run.iterates.push_back(current);

  std::vector<FieldState> fine_values(slots, u0);
  std::vector<FieldState> fine_starts(slots, u0);
  std::vector<char> have_fine(slots, 0);
  std::vector<char> stale(slots, 0);
  std::vector<std::exception_ptr> failures(slots);

  for (int k = 0; k < options.iterations; ++k) {
    for (int n = 1; n <= n_coarse; ++n) {
      stale[n] = !have_fine[n] || !(fine_starts[n] == current[n - 1]);
    }
    // Time-parallel fine sweeps; results merge by index.
    if (options.schedule == Schedule::Parallel) {
#pragma omp parallel for schedule(dynamic, 1)
      for (int n = 1; n <= n_coarse; ++n) {
        if (!stale[n]) continue;
        try {
          fine_values[n] = fine_sweep(fine, n, current[n - 1], path);
        } catch (...) {
          failures[n] = std::current_exception();
        }
      }
    } else {
      for (int n = 1; n <= n_coarse; ++n) {
        if (!stale[n]) continue;
        try {
          fine_values[n] = fine_sweep(fine, n, current[n - 1], path);
        } catch (...) {
          failures[n] = std::current_exception();
        }
      }
    }
    for (int n = 1; n <= n_coarse; ++n) {
      if (failures[n]) std::rethrow_exception(failures[n]);
      if (stale[n]) {
        fine_starts[n] = current[n - 1];
        have_fine[n] = 1;
        ++run.fine_sweeps;
      }
    }

    // Sequential prediction-correction.
    std::vector<FieldState> next(slots, u0);
    std::vector<FieldState> next_coarse(slots, u0);
    double increment = 0.0;
    for (int n = 1; n <= n_coarse; ++n) {
      next_coarse[n] = coarse_step(coarse, n, next[n - 1], path);
      FieldState correction = next_coarse[n];
      correction -= coarse_values[n];
      next[n] = fine_values[n];
      next[n] += correction;
      if (options.stop_tolerance) {
        increment = std::max(increment, weighted_norm(next[n] - current[n]));
      }
    }
    current = std::move(next);
    coarse_values = std::move(next_coarse);
    ++run.iterations;
    run.squared_errors.push_back(squared_distance(current, run.reference.states));
    if (options.keep_iterates) run.iterates.push_back(current);
    if (options.stop_tolerance && increment < *options.stop_tolerance) break;
  }
  if (!options.keep_iterates) run.iterates.push_back(std::move(current));
  return run;
}

void ErrorAccumulator::add(const std::vector<std::vector<double>>& squared_errors) {
  if (samples_ == 0) {
    sums_ = squared_errors;
  } else {
    if (squared_errors.size() != sums_.size()) {
      throw MeshError("samples disagree on the iteration count");
    }
    for (std::size_t k = 0; k < sums_.size(); ++k) {
      if (squared_errors[k].size() != sums_[k].size()) {
        throw MeshError("samples disagree on the number of subintervals");
      }
      for (std::size_t n = 0; n < sums_[k].size(); ++n) sums_[k][n] += squared_errors[k][n];
    }
  }
  ++samples_;
}

std::vector<double> ErrorAccumulator::curve() const {
  if (samples_ == 0) throw EmptyInput("no Monte Carlo samples");
  std::vector<double> out;
  out.reserve(sums_.size());
  for (const auto& row : sums_) {
    double sup = 0.0;
    for (double s : row) sup = std::max(sup, s / samples_);
    out.push_back(std::sqrt(sup));
  }
  return out;
}

std::vector<double> iteration_errors(std::span<const ParaRealRun> runs) {
  if (runs.empty()) throw EmptyInput("iteration_errors needs at least one run");
  ErrorAccumulator acc;
  for (const ParaRealRun& run : runs) acc.add(run.squared_errors);
  return acc.curve();
}

double bound_envelope(int k, int n_coarse, double coarse_step) {
  if (k < 0) throw DomainError("bound_envelope needs k >= 0");
  if (k >= n_coarse) throw DomainError("bound_envelope: k >= N, the product vanishes");
  double value = 1.0;
  for (int j = 1; j <= k; ++j) value *= coarse_step * (n_coarse - j) / j;
  return value;
}

}  // namespace parawell
