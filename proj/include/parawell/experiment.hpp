/**
 * @file experiment.hpp
 * @brief Experiment configuration, Monte Carlo drivers and result tables.
 *
 * Samples run as an OpenMP loop; each sample's squared errors are stored by
 * index and reduced in index order afterwards, so results do not depend on
 * the thread count.
 */
#ifndef PARAWELL_EXPERIMENT_HPP
#define PARAWELL_EXPERIMENT_HPP

#include "parawell/parareal.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace parawell {

enum class Problem { TM1D, TM2D };

struct GridConfig {
  double extent_x = 0.0;
  double extent_y = 0.0;
  int nx = 0;
  int ny = 0;
  double epsilon = 1.0;
  double mu = 1.0;
};

struct ExperimentConfig {
  std::string name = "experiment";
  Problem problem = Problem::TM1D;
  GridConfig grid;
  NoiseKind noise = StandardBM{};
  bool shared_w = true;
  std::vector<double> sigma_list{2.0};
  std::vector<double> lambda_list{1.0};
  double coarse_dt = 0.0;  // ΔT
  double fine_dt = 0.0;    // Δt
  std::vector<double> coarse_dt_list;  // order study
  std::vector<int> order_iterations{1, 2, 3, 4, 5};
  double t_end = 1.0;
  int iterations = 12;  // K
  int mc_samples = 64;
  std::uint64_t master_seed = 1;
  Drift drift = Drift::zero();
  /// "auto", "dense" or "krylov".
  std::string semigroup = "auto";
  KrylovOptions krylov;
  std::string outputs = "out";

  /// J = ΔT/Δt for the given coarse step; throws ConfigError("dT").
  int fine_per_coarse(double coarse) const;
  /// N = T/ΔT; throws ConfigError("T_end").
  int coarse_steps(double coarse) const;

  /// Throws ConfigError naming the offending field.
  void validate() const;
};

ExperimentConfig parse_config(std::string_view json_text);
/// Throws IoError when the file cannot be read.
ExperimentConfig load_config(const std::filesystem::path& file);
std::string config_to_json(const ExperimentConfig& config);

GridPtr make_grid(const ExperimentConfig& config);

/// 1D: E_z = sin(x), H_y = -sqrt(ε/μ) sin(x).
/// 2D: E_z = sin(3πx)sin(4πy), H_x = -0.8cos(3πx)sin(4πy), H_y = -0.6 sin(3πx)sin(4πy).
FieldState initial_condition(Problem problem, const GridPtr& grid);

struct ErrorRow {
  std::string experiment;
  double sigma = 0.0;
  double lambda = 0.0;
  double coarse_dt = 0.0;
  int k = 0;
  double error = 0.0;
  double bound = 0.0;  // NaN when k >= N
  std::uint64_t seed = 0;
  int samples = 0;
  double wall_seconds = 0.0;
};

struct SlopeRow {
  std::string experiment;
  double sigma = 0.0;
  double lambda = 0.0;
  int k = 0;
  double slope = 0.0;
  double intercept = 0.0;
  double residual = 0.0;
};

struct SnapshotRow {
  double x = 0.0;
  double y = 0.0;
  std::string component;
  double value = 0.0;
  double lambda = 0.0;
};

struct RoughnessRow {
  double lambda = 0.0;
  double roughness = 0.0;
};

struct ResultTable {
  std::vector<ErrorRow> errors;
  std::vector<SlopeRow> slopes;
  std::vector<SnapshotRow> snapshots;
  std::vector<RoughnessRow> roughness;

  /// Error curve (ordered by k) of one (σ, λ, ΔT) group.
  std::vector<double> curve(double sigma, double lambda, double coarse_dt) const;
  const SlopeRow& slope(double sigma, double lambda, int k) const;
  double roughness_for(double lambda) const;
};

/// Error vs k for every (σ, λ), averaged over mc_samples shared paths.
ResultTable run_converge_iters(const ExperimentConfig& config);

/// Error vs ΔT over coarse_dt_list at fixed Δt, plus fitted slopes per k.
/// Throws ConfigError("dT_list") with fewer than 3 resolutions.
ResultTable run_converge_order(const ExperimentConfig& config);

/// E_z(x, y, T) snapshots per λ and the roughness statistic: sample standard
/// deviation of E_z^λ - E_z^0 over the grid. TM2D only.
ResultTable run_noise_impact(const ExperimentConfig& config);

/// One sample at the first σ and λ: errors vs k and the final field.
ResultTable run_solve(const ExperimentConfig& config);

struct OrderFit {
  double slope = 0.0;
  double intercept = 0.0;
  /// Root-mean-square residual of the log-log fit.
  double residual = 0.0;
};

/// Least squares on (log ΔT, log error). Throws DomainError for nonpositive
/// values or fewer than 3 points.
OrderFit fit_order(std::span<const std::pair<double, double>> points);

void write_errors_csv(std::ostream& out, const ResultTable& table);
void write_slopes_csv(std::ostream& out, const ResultTable& table);
void write_snapshots_csv(std::ostream& out, const ResultTable& table);
void write_roughness_csv(std::ostream& out, const ResultTable& table, std::uint64_t seed);
void write_timing_csv(std::ostream& out, const ResultTable& table);

enum class ExperimentKind { ConvergeIters, ConvergeOrder, NoiseImpact, Solve };

/// Writes every CSV and SVG artifact of the experiment into `dir`.
/// Throws IoError.
void write_outputs(const ResultTable& table, const ExperimentConfig& config, ExperimentKind kind,
                   const std::filesystem::path& dir);

ResultTable run_experiment(const ExperimentConfig& config, ExperimentKind kind);

}  // namespace parawell

#endif  // PARAWELL_EXPERIMENT_HPP
