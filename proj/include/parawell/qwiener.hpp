/**
 * @file qwiener.hpp
 * @brief Q-Wiener increments on the fine mesh, coarse aggregation and the
 *        additive noise operator B.
 *
 * Increments are pre-generated per sample and stored, so the coarse
 * propagator, the fine sweeps and the reference solve all consume the same
 * path whatever order they run in.
 */
#ifndef PARAWELL_QWIENER_HPP
#define PARAWELL_QWIENER_HPP

#include "parawell/grid.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <variant>
#include <vector>

namespace parawell {

/// One scalar Brownian motion, constant in space.
struct StandardBM {};

/// W(t) = sqrt(2/a) Σ_n n^{-(2r+1+δ)/2} sin(nπx/a) β_n(t), truncated at n_modes.
struct TraceClassSeries {
  double a = 2.0;
  double r = 0.5;
  double delta = 0.001;
  int n_modes = 100;
};

using NoiseKind = std::variant<StandardBM, TraceClassSeries>;

class NoiseSpec {
 public:
  /// Validates δ > 0, r >= 0, a > 0, n_modes >= 1.
  NoiseSpec(NoiseKind kind, double lambda_e, double lambda_h, bool shared_w = true);

  const NoiseKind& kind() const noexcept { return kind_; }
  double lambda_e() const noexcept { return lambda_e_; }
  double lambda_h() const noexcept { return lambda_h_; }
  /// E and H equations driven by the same path (true) or by independent ones.
  bool shared_w() const noexcept { return shared_w_; }

  bool is_trace_class() const noexcept { return std::holds_alternative<TraceClassSeries>(kind_); }
  int modes() const noexcept;
  int channels() const noexcept { return shared_w_ ? 1 : 2; }
  /// Number of doubles in one increment.
  int width() const noexcept { return modes() * channels(); }

  NoiseSpec with_scales(double lambda_e, double lambda_h) const;

 private:
  NoiseKind kind_;
  double lambda_e_;
  double lambda_h_;
  bool shared_w_;
};

/// λ_n = n^{-(2r+1+δ)}.
double eigenvalue(const TraceClassSeries& series, int n);
/// Σ_{n <= n_modes} λ_n.
double truncated_trace(const TraceClassSeries& series);
/// ζ(2r+1+δ) - truncated_trace.
double trace_remainder(const TraceClassSeries& series);

class WienerPath {
 public:
  /// Wraps explicit increments (step-major, width values per fine step).
  WienerPath(std::uint64_t seed, int n_coarse, int n_fine_per_coarse, double dt_fine, int width,
             std::vector<double> increments);

  std::uint64_t seed() const noexcept { return seed_; }
  int n_coarse() const noexcept { return n_coarse_; }
  int n_fine_per_coarse() const noexcept { return n_fine_per_coarse_; }
  double dt_fine() const noexcept { return dt_fine_; }
  int width() const noexcept { return width_; }
  const std::vector<double>& increments() const noexcept { return increments_; }

  /// Fine increment j (1..J) of subinterval n (1..N).
  std::span<const double> fine_increment(int n, int j) const;

 private:
  std::uint64_t seed_;
  int n_coarse_;
  int n_fine_per_coarse_;
  double dt_fine_;
  int width_;
  std::vector<double> increments_;
};

/// Deterministic in (spec, seed). The fine increments depend only on the
/// total step count N·J, so regrouping the same fine mesh keeps the path.
WienerPath sample_path(const NoiseSpec& spec, std::uint64_t seed, int n_coarse,
                       int n_fine_per_coarse, double dt);

/// Same fine increments viewed as n_coarse subintervals of n_fine_per_coarse
/// steps. Throws MeshError when the total step count differs.
WienerPath regroup(const WienerPath& path, int n_coarse, int n_fine_per_coarse);

/// Sums consecutive groups of `factor` fine increments (left to right), giving
/// the same Brownian path on a fine mesh `factor` times coarser.
WienerPath coarsen(const WienerPath& path, int factor);

/// Left-to-right sum of the J fine increments of subinterval n. Throws IndexError.
std::vector<double> coarse_increment(const WienerPath& path, int n);

/// Per-sample seed derived from the master seed (splitmix64 mixing).
std::uint64_t sample_seed(std::uint64_t master_seed, std::uint64_t sample_index);

/// B·ΔW on a given grid, with the mode table evaluated once.
class NoiseInjector {
 public:
  NoiseInjector(NoiseSpec spec, GridPtr grid);

  const NoiseSpec& spec() const noexcept { return spec_; }
  const GridPtr& grid_ptr() const noexcept { return grid_; }

  /// Throws NoiseShapeError when increment.size() != spec().width().
  FieldState inject(std::span<const double> increment) const;
  /// Adds B·ΔW into state without allocating.
  void add_to(FieldState& state, std::span<const double> increment) const;

 private:
  NoiseSpec spec_;
  GridPtr grid_;
  Eigen::MatrixXd modes_;  // nx × n_modes, x-dependent only
};

/// B(t_index)·increment. B is time-independent; t_index is accepted for the
/// general interface.
FieldState inject_noise(const NoiseSpec& spec, const GridPtr& grid, int t_index,
                        std::span<const double> increment);

/// Binary replay file: "PWWIENER", seed u64, N u32, J u32, dt f64, kind u32,
/// width u32, then N·J·width little-endian f64.
void save_path(const std::filesystem::path& file, const WienerPath& path, const NoiseSpec& spec);
WienerPath load_path(const std::filesystem::path& file);

}  // namespace parawell

#endif  // PARAWELL_QWIENER_HPP
