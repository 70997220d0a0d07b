#include "parawell/experiment.hpp"

#include "parawell/errors.hpp"
#include "parawell/plot.hpp"

#include "json.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>

namespace parawell {

using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

int integer_ratio(double numerator, double denominator, const char* field) {
  if (!(numerator > 0.0) || !(denominator > 0.0)) throw ConfigError(field, "steps must be positive");
  const double ratio = numerator / denominator;
  const long rounded = std::lround(ratio);
  if (rounded < 1 || std::abs(ratio - static_cast<double>(rounded)) > 1e-9 * ratio) {
    throw ConfigError(field, "ratio " + std::to_string(ratio) + " is not a positive integer");
  }
  return static_cast<int>(rounded);
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(key, e.what());
  }
}

int threads_available() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

SemigroupOptions semigroup_options(const ExperimentConfig& config, std::vector<double> steps) {
  SemigroupOptions options;
  options.krylov = config.krylov;
  if (config.semigroup == "dense") options.strategy = DenseExp{};
  if (config.semigroup == "krylov") options.strategy = KrylovExpmv{config.krylov};
  options.cached_steps = std::move(steps);
  return options;
}

NoiseSpec unit_noise(const ExperimentConfig& config) {
  return NoiseSpec(config.noise, 1.0, 1.0, config.shared_w);
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

struct Case {
  double sigma;
  double lambda;
};

/// Shared model objects for one experiment.
struct Model {
  GridPtr grid;
  FieldState u0;
  std::vector<std::shared_ptr<const MaxwellOperator>> ops;        // per σ
  std::vector<std::shared_ptr<const NoiseInjector>> injectors;  // per λ

  Model(const ExperimentConfig& config, const std::vector<double>& sigmas,
        const std::vector<double>& lambdas, std::vector<double> cached_steps)
      : grid(make_grid(config)), u0(initial_condition(config.problem, grid)) {
    const MaxwellOperator base = assemble(grid, 0.0, semigroup_options(config, std::move(cached_steps)));
    for (double sigma : sigmas) ops.push_back(std::make_shared<const MaxwellOperator>(base.with_sigma(sigma)));
    const NoiseSpec unit = unit_noise(config);
    for (double lambda : lambdas) {
      injectors.push_back(std::make_shared<const NoiseInjector>(unit.with_scales(lambda, lambda), grid));
    }
  }
};

using SquaredErrors = std::vector<std::vector<double>>;

/// Runs every case on every sample; returns [case][sample] squared errors and
/// per-case accumulated wall time.
template <typename PathFactory>
std::vector<std::vector<SquaredErrors>> monte_carlo(const ExperimentConfig& config, const Model& model,
                                                     const std::vector<std::pair<int, int>>& cases,
                                                     double coarse_dt, int iterations,
                                                     PathFactory make_path,
                                                     std::vector<double>& wall) {
  const int samples = config.mc_samples;
  std::vector<std::vector<SquaredErrors>> out(cases.size(), std::vector<SquaredErrors>(samples));
  std::vector<std::vector<double>> times(samples, std::vector<double>(cases.size(), 0.0));
  std::vector<std::exception_ptr> failures(samples);
  const bool outer_parallel = samples > 1 && samples >= threads_available();

  auto work = [&](int s) {
    try {
      const WienerPath path = make_path(s);
      for (std::size_t c = 0; c < cases.size(); ++c) {
        const auto start = std::chrono::steady_clock::now();
        const auto& op = model.ops[static_cast<std::size_t>(cases[c].first)];
        const auto& noise = model.injectors[static_cast<std::size_t>(cases[c].second)];
        const PropagatorConfig coarse{op, noise, config.drift, coarse_dt};
        const PropagatorConfig fine{op, noise, config.drift, config.fine_dt};
        PararealOptions options;
        options.iterations = iterations;
        options.schedule = outer_parallel ? Schedule::Serial : Schedule::Parallel;
        ParaRealRun run = parareal_solve(coarse, fine, model.u0, path, options);
        out[c][static_cast<std::size_t>(s)] = std::move(run.squared_errors);
        times[static_cast<std::size_t>(s)][c] = seconds_since(start);
      }
    } catch (...) {
      failures[static_cast<std::size_t>(s)] = std::current_exception();
    }
  };

  if (outer_parallel) {
#pragma omp parallel for schedule(dynamic, 1)
    for (int s = 0; s < samples; ++s) work(s);
  } else {
    for (int s = 0; s < samples; ++s) work(s);
  }
  for (const auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }
  wall.assign(cases.size(), 0.0);
  for (const auto& row : times) {
    for (std::size_t c = 0; c < cases.size(); ++c) wall[c] += row[c];
  }
  return out;
}

std::vector<double> reduce(const std::vector<SquaredErrors>& per_sample) {
  ErrorAccumulator acc;
  for (const auto& e : per_sample) acc.add(e);
  return acc.curve();
}

void append_curve(ResultTable& table, const ExperimentConfig& config, double sigma, double lambda,
                  double coarse_dt, const std::vector<double>& curve, int samples, double wall) {
  const int n_coarse = config.coarse_steps(coarse_dt);
  for (std::size_t k = 0; k < curve.size(); ++k) {
    ErrorRow row;
    row.experiment = config.name;
    row.sigma = sigma;
    row.lambda = lambda;
    row.coarse_dt = coarse_dt;
    row.k = static_cast<int>(k);
    row.error = curve[k];
    row.bound = row.k < n_coarse ? bound_envelope(row.k, n_coarse, coarse_dt) : kNaN;
    row.seed = config.master_seed;
    row.samples = samples;
    row.wall_seconds = wall;
    table.errors.push_back(row);
  }
}

std::string format_number(double v) {
  std::ostringstream s;
  s << std::setprecision(17) << v;
  return s.str();
}

void write_text(const std::filesystem::path& file, const std::string& text) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw IoError("cannot open " + file.string());
  out << text;
  if (!out) throw IoError("write failed for " + file.string());
}

template <typename Writer>
void write_csv(const std::filesystem::path& file, Writer&& writer) {
  std::ostringstream s;
  writer(s);
  write_text(file, s.str());
}

std::string short_number(double v) {
  std::ostringstream s;
  s << std::setprecision(6) << v;
  return s.str();
}

}  // namespace

// ---------------------------------------------------------------------------
// Configuration

int ExperimentConfig::fine_per_coarse(double coarse) const {
  return integer_ratio(coarse, fine_dt, "dT");
}

int ExperimentConfig::coarse_steps(double coarse) const {
  return integer_ratio(t_end, coarse, "T_end");
}

void ExperimentConfig::validate() const {
  if (name.empty()) throw ConfigError("name", "must not be empty");
  if (grid.nx < 2) throw ConfigError("grid.nx", "needs at least 2 interior points");
  if (!(grid.extent_x > 0.0)) throw ConfigError("grid.extent_x", "must be positive");
  if (problem == Problem::TM2D) {
    if (grid.ny < 2) throw ConfigError("grid.ny", "needs at least 2 interior points");
    if (!(grid.extent_y > 0.0)) throw ConfigError("grid.extent_y", "must be positive");
  }
  if (!(grid.epsilon > 0.0)) throw ConfigError("grid.epsilon", "must be positive");
  if (!(grid.mu > 0.0)) throw ConfigError("grid.mu", "must be positive");
  if (sigma_list.empty()) throw ConfigError("sigma_list", "must not be empty");
  for (double s : sigma_list) {
    if (!(s >= 0.0)) throw ConfigError("sigma_list", "damping must be >= 0");
  }
  if (lambda_list.empty()) throw ConfigError("lambda_list", "must not be empty");
  for (double l : lambda_list) {
    if (!std::isfinite(l)) throw ConfigError("lambda_list", "must be finite");
  }
  if (!(fine_dt > 0.0)) throw ConfigError("dt", "must be positive");
  if (!(t_end > 0.0)) throw ConfigError("T_end", "must be positive");
  if (coarse_dt > 0.0) {
    fine_per_coarse(coarse_dt);
    coarse_steps(coarse_dt);
  } else if (coarse_dt_list.empty()) {
    throw ConfigError("dT", "must be positive");
  }
  for (double c : coarse_dt_list) {
    fine_per_coarse(c);
    coarse_steps(c);
  }
  if (iterations < 0) throw ConfigError("K", "must be >= 0");
  if (mc_samples < 1) throw ConfigError("mc_samples", "must be >= 1");
  for (int k : order_iterations) {
    if (k < 0) throw ConfigError("order_k", "iterations must be >= 0");
  }
  if (semigroup != "auto" && semigroup != "dense" && semigroup != "krylov") {
    throw ConfigError("semigroup", "must be auto, dense or krylov");
  }
  if (krylov.subspace_dim < 1) throw ConfigError("krylov.subspace_dim", "must be >= 1");
  if (!(krylov.tol > 0.0)) throw ConfigError("krylov.tol", "must be positive");
  if (krylov.max_restarts < 0) throw ConfigError("krylov.max_restarts", "must be >= 0");
  try {
    unit_noise(*this);
  } catch (const DomainError& e) {
    throw ConfigError("noise", e.what());
  }
}

ExperimentConfig parse_config(std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError("<document>", e.what());
  }
  if (!j.is_object()) throw ConfigError("<document>", "expected a JSON object");

  ExperimentConfig c;
  c.name = get_or<std::string>(j, "name", c.name);
  const auto problem = get_or<std::string>(j, "problem", "TM1D");
  if (problem == "TM1D") {
    c.problem = Problem::TM1D;
  } else if (problem == "TM2D") {
    c.problem = Problem::TM2D;
  } else {
    throw ConfigError("problem", "must be TM1D or TM2D");
  }

  if (!j.contains("grid")) throw ConfigError("grid", "missing");
  const json& g = j.at("grid");
  c.grid.extent_x = get_or<double>(g, "extent_x", 2.0 * std::numbers::pi);
  c.grid.extent_y = get_or<double>(g, "extent_y", c.grid.extent_x);
  c.grid.epsilon = get_or<double>(g, "epsilon", 1.0);
  c.grid.mu = get_or<double>(g, "mu", 1.0);
  // Either interior point counts or spacings (extent/dx - 1 interior points).
  auto points = [&](const char* count, const char* spacing, double extent) {
    if (g.contains(count)) return get_or<int>(g, count, 0);
    if (g.contains(spacing)) {
      const double h = get_or<double>(g, spacing, 0.0);
      if (!(h > 0.0)) throw ConfigError(std::string("grid.") + spacing, "must be positive");
      return integer_ratio(extent, h, spacing) - 1;
    }
    throw ConfigError(std::string("grid.") + count, "give a point count or a spacing");
  };
  c.grid.nx = points("nx", "dx", c.grid.extent_x);
  if (c.problem == Problem::TM2D) c.grid.ny = points("ny", "dy", c.grid.extent_y);

  if (j.contains("noise")) {
    const json& n = j.at("noise");
    const auto kind = get_or<std::string>(n, "kind", "standard_bm");
    if (kind == "standard_bm") {
      c.noise = StandardBM{};
    } else if (kind == "trace_class") {
      TraceClassSeries s;
      s.a = get_or<double>(n, "a", s.a);
      s.r = get_or<double>(n, "r", s.r);
      s.delta = get_or<double>(n, "delta", s.delta);
      s.n_modes = get_or<int>(n, "n_modes", s.n_modes);
      c.noise = s;
    } else {
      throw ConfigError("noise.kind", "must be standard_bm or trace_class");
    }
    c.shared_w = get_or<bool>(n, "shared_w", true);
  }

  c.sigma_list = get_or<std::vector<double>>(j, "sigma_list", c.sigma_list);
  c.lambda_list = get_or<std::vector<double>>(j, "lambda_list", c.lambda_list);
  c.coarse_dt = get_or<double>(j, "dT", 0.0);
  c.fine_dt = get_or<double>(j, "dt", 0.0);
  c.coarse_dt_list = get_or<std::vector<double>>(j, "dT_list", {});
  c.order_iterations = get_or<std::vector<int>>(j, "order_k", c.order_iterations);
  c.t_end = get_or<double>(j, "T_end", c.t_end);
  c.iterations = get_or<int>(j, "K", c.iterations);
  c.mc_samples = get_or<int>(j, "mc_samples", c.mc_samples);
  c.master_seed = get_or<std::uint64_t>(j, "master_seed", c.master_seed);
  c.semigroup = get_or<std::string>(j, "semigroup", c.semigroup);
  c.outputs = get_or<std::string>(j, "outputs", c.outputs);

  if (j.contains("drift")) {
    const json& d = j.at("drift");
    const auto kind = get_or<std::string>(d, "kind", "zero");
    if (kind == "zero") {
      c.drift = Drift::zero();
    } else if (kind == "affine_test") {
      c.drift = Drift::affine_test(get_or<double>(d, "rate", 0.0), get_or<double>(d, "offset", 0.0));
    } else {
      throw ConfigError("drift.kind", "must be zero or affine_test");
    }
  }
  if (j.contains("krylov")) {
    const json& k = j.at("krylov");
    c.krylov.subspace_dim = get_or<int>(k, "subspace_dim", c.krylov.subspace_dim);
    c.krylov.tol = get_or<double>(k, "tol", c.krylov.tol);
    c.krylov.max_restarts = get_or<int>(k, "max_restarts", c.krylov.max_restarts);
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw IoError("cannot read config " + file.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

std::string config_to_json(const ExperimentConfig& c) {
  json j;
  j["name"] = c.name;
  j["problem"] = c.problem == Problem::TM1D ? "TM1D" : "TM2D";
  j["grid"] = {{"extent_x", c.grid.extent_x}, {"nx", c.grid.nx}, {"epsilon", c.grid.epsilon},
               {"mu", c.grid.mu}};
  if (c.problem == Problem::TM2D) {
    j["grid"]["extent_y"] = c.grid.extent_y;
    j["grid"]["ny"] = c.grid.ny;
  }
  if (const auto* s = std::get_if<TraceClassSeries>(&c.noise)) {
    j["noise"] = {{"kind", "trace_class"}, {"a", s->a}, {"r", s->r}, {"delta", s->delta},
                  {"n_modes", s->n_modes}, {"shared_w", c.shared_w}};
  } else {
    j["noise"] = {{"kind", "standard_bm"}, {"shared_w", c.shared_w}};
  }
  j["sigma_list"] = c.sigma_list;
  j["lambda_list"] = c.lambda_list;
  if (c.coarse_dt > 0.0) j["dT"] = c.coarse_dt;
  j["dt"] = c.fine_dt;
  if (!c.coarse_dt_list.empty()) j["dT_list"] = c.coarse_dt_list;
  j["order_k"] = c.order_iterations;
  j["T_end"] = c.t_end;
  j["K"] = c.iterations;
  j["mc_samples"] = c.mc_samples;
  j["master_seed"] = c.master_seed;
  if (c.drift.kind() == Drift::Kind::AffineTest) {
    j["drift"] = {{"kind", "affine_test"}, {"rate", c.drift.rate()}, {"offset", c.drift.offset()}};
  } else {
    j["drift"] = {{"kind", "zero"}};
  }
  j["semigroup"] = c.semigroup;
  j["krylov"] = {{"subspace_dim", c.krylov.subspace_dim}, {"tol", c.krylov.tol},
                 {"max_restarts", c.krylov.max_restarts}};
  j["outputs"] = c.outputs;
  return j.dump(2);
}

GridPtr make_grid(const ExperimentConfig& config) {
  const GridConfig& g = config.grid;
  if (config.problem == Problem::TM1D) return share(Grid::line(g.extent_x, g.nx, g.epsilon, g.mu));
  return share(Grid::plane(g.extent_x, g.extent_y, g.nx, g.ny, g.epsilon, g.mu));
}

FieldState initial_condition(Problem problem, const GridPtr& grid) {
  const Grid& g = *grid;
  FieldState u(grid);
  if (problem == Problem::TM1D) {
    if (g.dimension() != 1) throw DimensionError("TM1D initial condition needs a 1D grid");
    const double impedance = std::sqrt(g.epsilon() / g.mu());
    for (int i = 0; i < g.nx(); ++i) {
      u.at(0, i) = std::sin(g.x(i));
      u.at(1, i) = -impedance * std::sin(g.x(i));
    }
    return u;
  }
  if (g.dimension() != 2) throw DimensionError("TM2D initial condition needs a 2D grid");
  constexpr double pi = std::numbers::pi;
  for (int j = 0; j < g.ny(); ++j) {
    for (int i = 0; i < g.nx(); ++i) {
      const double x = g.x(i), y = g.y(j);
      u.at(0, i, j) = std::sin(3 * pi * x) * std::sin(4 * pi * y);
      u.at(1, i, j) = -0.8 * std::cos(3 * pi * x) * std::sin(4 * pi * y);
      u.at(2, i, j) = -0.6 * std::sin(3 * pi * x) * std::sin(4 * pi * y);
    }
  }
  return u;
}

// ---------------------------------------------------------------------------
// Result lookup

std::vector<double> ResultTable::curve(double sigma, double lambda, double coarse_dt) const {
  std::vector<double> out;
  for (const ErrorRow& row : errors) {
    if (row.sigma == sigma && row.lambda == lambda && row.coarse_dt == coarse_dt) {
      if (row.k != static_cast<int>(out.size())) throw IndexError("error rows out of order");
      out.push_back(row.error);
    }
  }
  if (out.empty()) throw IndexError("no error curve for the requested group");
  return out;
}

const SlopeRow& ResultTable::slope(double sigma, double lambda, int k) const {
  for (const SlopeRow& row : slopes) {
    if (row.sigma == sigma && row.lambda == lambda && row.k == k) return row;
  }
  throw IndexError("no slope for the requested group");
}

double ResultTable::roughness_for(double lambda) const {
  for (const RoughnessRow& row : roughness) {
    if (row.lambda == lambda) return row.roughness;
  }
  throw IndexError("no roughness for the requested lambda");
}

// ---------------------------------------------------------------------------
// Experiments

ResultTable run_converge_iters(const ExperimentConfig& config) {
  config.validate();
  if (!(config.coarse_dt > 0.0)) throw ConfigError("dT", "must be positive");
  const int n_coarse = config.coarse_steps(config.coarse_dt);
  const int n_fine = config.fine_per_coarse(config.coarse_dt);
  const Model model(config, config.sigma_list, config.lambda_list, {config.coarse_dt, config.fine_dt});
  const NoiseSpec unit = unit_noise(config);

  std::vector<std::pair<int, int>> cases;
  for (std::size_t s = 0; s < config.sigma_list.size(); ++s) {
    for (std::size_t l = 0; l < config.lambda_list.size(); ++l) {
      cases.emplace_back(static_cast<int>(s), static_cast<int>(l));
    }
  }
  std::vector<double> wall;
  const auto results = monte_carlo(
      config, model, cases, config.coarse_dt, config.iterations,
      [&](int s) {
        return sample_path(unit, sample_seed(config.master_seed, static_cast<std::uint64_t>(s)),
                           n_coarse, n_fine, config.fine_dt);
      },
      wall);

  ResultTable table;
  for (std::size_t c = 0; c < cases.size(); ++c) {
    append_curve(table, config, config.sigma_list[static_cast<std::size_t>(cases[c].first)],
                 config.lambda_list[static_cast<std::size_t>(cases[c].second)], config.coarse_dt,
                 reduce(results[c]), config.mc_samples, wall[c]);
  }
  return table;
}

ResultTable run_converge_order(const ExperimentConfig& config) {
  config.validate();
  if (config.coarse_dt_list.size() < 3) {
    throw ConfigError("dT_list", "the order study needs at least 3 coarse resolutions");
  }
  if (config.order_iterations.empty()) throw ConfigError("order_k", "must not be empty");
  const int total_steps = integer_ratio(config.t_end, config.fine_dt, "dt");
  const int iterations = *std::max_element(config.order_iterations.begin(), config.order_iterations.end());

  std::vector<double> cached = config.coarse_dt_list;
  cached.push_back(config.fine_dt);
  const Model model(config, config.sigma_list, config.lambda_list, cached);
  const NoiseSpec unit = unit_noise(config);

  std::vector<std::pair<int, int>> cases;
  for (std::size_t s = 0; s < config.sigma_list.size(); ++s) {
    for (std::size_t l = 0; l < config.lambda_list.size(); ++l) {
      cases.emplace_back(static_cast<int>(s), static_cast<int>(l));
    }
  }

  ResultTable table;
  for (double coarse : config.coarse_dt_list) {
    const int n_coarse = config.coarse_steps(coarse);
    const int n_fine = config.fine_per_coarse(coarse);
    std::vector<double> wall;
    // The same fine Brownian path, regrouped for every coarse resolution.
    const auto results = monte_carlo(
        config, model, cases, coarse, iterations,
        [&](int s) {
          const WienerPath fine = sample_path(
              unit, sample_seed(config.master_seed, static_cast<std::uint64_t>(s)), total_steps, 1,
              config.fine_dt);
          return regroup(fine, n_coarse, n_fine);
        },
        wall);
    for (std::size_t c = 0; c < cases.size(); ++c) {
      append_curve(table, config, config.sigma_list[static_cast<std::size_t>(cases[c].first)],
                   config.lambda_list[static_cast<std::size_t>(cases[c].second)], coarse,
                   reduce(results[c]), config.mc_samples, wall[c]);
    }
  }

  for (const auto& [si, li] : cases) {
    const double sigma = config.sigma_list[static_cast<std::size_t>(si)];
    const double lambda = config.lambda_list[static_cast<std::size_t>(li)];
    for (int k : config.order_iterations) {
      std::vector<std::pair<double, double>> points;
      for (double coarse : config.coarse_dt_list) {
        points.emplace_back(coarse, table.curve(sigma, lambda, coarse)[static_cast<std::size_t>(k)]);
      }
      SlopeRow row{config.name, sigma, lambda, k, kNaN, kNaN, kNaN};
      try {
        const OrderFit fit = fit_order(points);
        row.slope = fit.slope;
        row.intercept = fit.intercept;
        row.residual = fit.residual;
      } catch (const DomainError&) {
        // Some error vanished exactly (finite termination); no slope.
      }
      table.slopes.push_back(row);
    }
  }
  return table;
}

ResultTable run_noise_impact(const ExperimentConfig& config) {
  config.validate();
  if (config.problem != Problem::TM2D) throw ConfigError("problem", "noise-impact needs TM2D");
  if (!(config.coarse_dt > 0.0)) throw ConfigError("dT", "must be positive");
  const int n_coarse = config.coarse_steps(config.coarse_dt);
  const int n_fine = config.fine_per_coarse(config.coarse_dt);

  // λ = 0 is always run: it is the baseline of the roughness statistic.
  std::vector<double> lambdas{0.0};
  for (double l : config.lambda_list) {
    if (l != 0.0 && std::find(lambdas.begin(), lambdas.end(), l) == lambdas.end()) lambdas.push_back(l);
  }
  const double sigma = config.sigma_list.front();
  const Model model(config, {sigma}, lambdas, {config.coarse_dt, config.fine_dt});
  const WienerPath path = sample_path(unit_noise(config), sample_seed(config.master_seed, 0),
                                      n_coarse, n_fine, config.fine_dt);

  ResultTable table;
  std::vector<FieldState> finals;
  for (std::size_t l = 0; l < lambdas.size(); ++l) {
    const auto start = std::chrono::steady_clock::now();
    const PropagatorConfig coarse{model.ops[0], model.injectors[l], config.drift, config.coarse_dt};
    const PropagatorConfig fine{model.ops[0], model.injectors[l], config.drift, config.fine_dt};
    PararealOptions options;
    options.iterations = config.iterations;
    const ParaRealRun run = parareal_solve(coarse, fine, model.u0, path, options);
    finals.push_back(run.final_iterate().back());
    std::vector<double> curve;
    for (int k = 0; k <= run.iterations; ++k) curve.push_back(run.error(k));
    append_curve(table, config, sigma, lambdas[l], config.coarse_dt, curve, 1, seconds_since(start));
  }

  const Grid& g = *model.grid;
  const FieldState& baseline = finals.front();
  for (std::size_t l = 0; l < lambdas.size(); ++l) {
    const FieldState& field = finals[l];
    for (int j = 0; j < g.ny(); ++j) {
      for (int i = 0; i < g.nx(); ++i) {
        table.snapshots.push_back({g.x(i), g.y(j), "Ez", field.at(0, i, j), lambdas[l]});
      }
    }
    const Eigen::VectorXd diff = field.component(0) - baseline.component(0);
    const double mean = diff.mean();
    const double variance =
        diff.size() > 1 ? (diff.array() - mean).square().sum() / static_cast<double>(diff.size() - 1) : 0.0;
    table.roughness.push_back({lambdas[l], std::sqrt(variance)});
  }
  return table;
}

ResultTable run_solve(const ExperimentConfig& config) {
  config.validate();
  if (!(config.coarse_dt > 0.0)) throw ConfigError("dT", "must be positive");
  const int n_coarse = config.coarse_steps(config.coarse_dt);
  const int n_fine = config.fine_per_coarse(config.coarse_dt);
  const double sigma = config.sigma_list.front();
  const double lambda = config.lambda_list.front();
  const Model model(config, {sigma}, {lambda}, {config.coarse_dt, config.fine_dt});
  const WienerPath path = sample_path(unit_noise(config), sample_seed(config.master_seed, 0),
                                      n_coarse, n_fine, config.fine_dt);

  const auto start = std::chrono::steady_clock::now();
  const PropagatorConfig coarse{model.ops[0], model.injectors[0], config.drift, config.coarse_dt};
  const PropagatorConfig fine{model.ops[0], model.injectors[0], config.drift, config.fine_dt};
  PararealOptions options;
  options.iterations = config.iterations;
  const ParaRealRun run = parareal_solve(coarse, fine, model.u0, path, options);

  ResultTable table;
  std::vector<double> curve;
  for (int k = 0; k <= run.iterations; ++k) curve.push_back(run.error(k));
  append_curve(table, config, sigma, lambda, config.coarse_dt, curve, 1, seconds_since(start));

  const Grid& g = *model.grid;
  const FieldState& field = run.final_iterate().back();
  for (int c = 0; c < g.components(); ++c) {
    for (int j = 0; j < g.ny(); ++j) {
      for (int i = 0; i < g.nx(); ++i) {
        table.snapshots.push_back(
            {g.x(i), g.y(j), std::string(g.component_name(c)), field.at(c, i, j), lambda});
      }
    }
  }
  return table;
}

OrderFit fit_order(std::span<const std::pair<double, double>> points) {
  if (points.size() < 3) throw DomainError("fit_order needs at least 3 points");
  std::vector<double> xs, ys;
  for (const auto& [step, error] : points) {
    if (!(step > 0.0) || !(error > 0.0) || !std::isfinite(step) || !std::isfinite(error)) {
      throw DomainError("fit_order needs positive finite values");
    }
    xs.push_back(std::log(step));
    ys.push_back(std::log(error));
  }
  const double n = static_cast<double>(xs.size());
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  if (sxx == 0.0) throw DomainError("fit_order needs at least two distinct step sizes");
  OrderFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double r = ys[i] - (fit.intercept + fit.slope * xs[i]);
    ss += r * r;
  }
  fit.residual = std::sqrt(ss / n);
  return fit;
}

// ---------------------------------------------------------------------------
// Output

void write_errors_csv(std::ostream& out, const ResultTable& table) {
  out << "experiment,sigma,lambda,dT,k,error,bound,seed,samples\n";
  for (const ErrorRow& r : table.errors) {
    out << r.experiment << ',' << format_number(r.sigma) << ',' << format_number(r.lambda) << ','
        << format_number(r.coarse_dt) << ',' << r.k << ',' << format_number(r.error) << ','
        << format_number(r.bound) << ',' << r.seed << ',' << r.samples << '\n';
  }
}

void write_slopes_csv(std::ostream& out, const ResultTable& table) {
  out << "experiment,sigma,lambda,k,slope,intercept,residual\n";
  for (const SlopeRow& r : table.slopes) {
    out << r.experiment << ',' << format_number(r.sigma) << ',' << format_number(r.lambda) << ','
        << r.k << ',' << format_number(r.slope) << ',' << format_number(r.intercept) << ','
        << format_number(r.residual) << '\n';
  }
}

void write_snapshots_csv(std::ostream& out, const ResultTable& table) {
  out << "x,y,component,value,lambda\n";
  for (const SnapshotRow& r : table.snapshots) {
    out << format_number(r.x) << ',' << format_number(r.y) << ',' << r.component << ','
        << format_number(r.value) << ',' << format_number(r.lambda) << '\n';
  }
}

void write_roughness_csv(std::ostream& out, const ResultTable& table, std::uint64_t seed) {
  out << "lambda,roughness,seed\n";
  for (const RoughnessRow& r : table.roughness) {
    out << format_number(r.lambda) << ',' << format_number(r.roughness) << ',' << seed << '\n';
  }
}

void write_timing_csv(std::ostream& out, const ResultTable& table) {
  out << "experiment,sigma,lambda,dT,wall_seconds\n";
  const ErrorRow* previous = nullptr;
  for (const ErrorRow& r : table.errors) {
    if (previous && previous->sigma == r.sigma && previous->lambda == r.lambda &&
        previous->coarse_dt == r.coarse_dt) {
      continue;
    }
    out << r.experiment << ',' << format_number(r.sigma) << ',' << format_number(r.lambda) << ','
        << format_number(r.coarse_dt) << ',' << r.wall_seconds << '\n';
    previous = &r;
  }
}

namespace {

std::vector<Series> iteration_series(const ResultTable& table) {
  std::vector<Series> out;
  for (const ErrorRow& r : table.errors) {
    const std::string label = "sigma=" + short_number(r.sigma) + " lambda=" + short_number(r.lambda) +
                              " dT=" + short_number(r.coarse_dt);
    if (out.empty() || out.back().label != label) out.push_back({label, {}});
    out.back().points.emplace_back(static_cast<double>(r.k), r.error);
  }
  return out;
}

std::vector<Series> order_series(const ResultTable& table, const ExperimentConfig& config) {
  std::vector<Series> out;
  for (const SlopeRow& s : table.slopes) {
    Series series{"k=" + std::to_string(s.k) + " sigma=" + short_number(s.sigma) +
                      " slope=" + short_number(s.slope),
                  {}};
    for (double coarse : config.coarse_dt_list) {
      series.points.emplace_back(coarse,
                                 table.curve(s.sigma, s.lambda, coarse)[static_cast<std::size_t>(s.k)]);
    }
    out.push_back(std::move(series));
  }
  return out;
}

/// E_z along the grid row closest to mid-height, one series per λ.
std::vector<Series> profile_series(const ResultTable& table) {
  std::vector<double> ys;
  for (const SnapshotRow& r : table.snapshots) {
    if (r.component == "Ez") ys.push_back(r.y);
  }
  if (ys.empty()) return {};
  const auto [lo, hi] = std::minmax_element(ys.begin(), ys.end());
  const double middle = 0.5 * (*lo + *hi);
  double row_y = ys.front();
  for (double y : ys) {
    if (std::abs(y - middle) < std::abs(row_y - middle)) row_y = y;
  }
  std::vector<Series> out;
  for (const SnapshotRow& r : table.snapshots) {
    if (r.component != "Ez" || r.y != row_y) continue;
    const std::string label = "lambda=" + short_number(r.lambda);
    if (out.empty() || out.back().label != label) out.push_back({label, {}});
    out.back().points.emplace_back(r.x, r.value);
  }
  return out;
}

}  // namespace

void write_outputs(const ResultTable& table, const ExperimentConfig& config, ExperimentKind kind,
                   const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());

  write_csv(dir / "errors.csv", [&](std::ostream& o) { write_errors_csv(o, table); });
  write_csv(dir / "timing.csv", [&](std::ostream& o) { write_timing_csv(o, table); });
  write_text(dir / "config.json", config_to_json(config) + "\n");

  switch (kind) {
    case ExperimentKind::ConvergeIters:
    case ExperimentKind::Solve:
      write_text(dir / "errors.svg",
                 render_svg(iteration_series(table),
                            {config.name + ": mean-square error vs iteration", "k", "error", false, true}));
      break;
    case ExperimentKind::ConvergeOrder:
      write_csv(dir / "slopes.csv", [&](std::ostream& o) { write_slopes_csv(o, table); });
      write_text(dir / "order.svg",
                 render_svg(order_series(table, config),
                            {config.name + ": error vs coarse step", "dT", "error", true, true}));
      break;
    case ExperimentKind::NoiseImpact:
      write_csv(dir / "roughness.csv",
                [&](std::ostream& o) { write_roughness_csv(o, table, config.master_seed); });
      write_text(dir / "profile.svg",
                 render_svg(profile_series(table),
                            {config.name + ": Ez at mid-height, t = T", "x", "Ez", false, false}));
      break;
  }
  if (!table.snapshots.empty()) {
    write_csv(dir / "snapshot.csv", [&](std::ostream& o) { write_snapshots_csv(o, table); });
  }
}

ResultTable run_experiment(const ExperimentConfig& config, ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::ConvergeIters: return run_converge_iters(config);
    case ExperimentKind::ConvergeOrder: return run_converge_order(config);
    case ExperimentKind::NoiseImpact: return run_noise_impact(config);
    case ExperimentKind::Solve: return run_solve(config);
  }
  throw DomainError("unknown experiment kind");
}

}  // namespace parawell
