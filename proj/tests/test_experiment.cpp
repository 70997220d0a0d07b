#include "doctest.h"

#include "parawell/errors.hpp"
#include "parawell/experiment.hpp"
#include "parawell/plot.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

using namespace parawell;

namespace {

const char* kSmall1D = R"({
  "name": "small1d",
  "problem": "TM1D",
  "grid": { "nx": 15 },
  "noise": { "kind": "standard_bm" },
  "sigma_list": [0, 2],
  "lambda_list": [1],
  "dT": 0.125,
  "dt": 0.03125,
  "T_end": 1.0,
  "K": 8,
  "mc_samples": 3,
  "master_seed": 99
})";

const char* kSmall2D = R"({
  "name": "small2d",
  "problem": "TM2D",
  "grid": { "extent_x": 1.0, "extent_y": 1.0, "dx": 0.1, "dy": 0.1 },
  "noise": { "kind": "trace_class", "n_modes": 20 },
  "sigma_list": [8],
  "lambda_list": [0, 2, 8, 32],
  "dT": 0.125,
  "dt": 0.03125,
  "T_end": 1.0,
  "K": 8,
  "mc_samples": 1,
  "master_seed": 5
})";

std::string with(const std::string& base, const std::string& key, const std::string& value) {
  const std::regex re("\"" + key + "\": [^\\n]*\\n");
  return std::regex_replace(base, re, "\"" + key + "\": " + value + ",\n",
                            std::regex_constants::format_first_only);
}

std::string config_error_field(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.field();
  }
  return "";
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::filesystem::path scratch(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("parawell_test_" + name);
  std::filesystem::remove_all(dir);
  return dir;
}

}  // namespace

TEST_CASE("fit_order") {
  const std::vector<std::pair<double, double>> exact{{0.5, 0.25}, {0.25, 0.0625}, {0.125, 0.015625}};
  const OrderFit f = fit_order(exact);
  CHECK(f.slope == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(f.residual <= 1e-14);

  const std::vector<std::pair<double, double>> cubic{{0.1, 1e-3}, {0.05, 1.25e-4}, {0.025, 1.5625e-5}};
  CHECK(std::abs(fit_order(cubic).slope - 3.0) <= 1e-9);

  const std::vector<std::pair<double, double>> flat{{0.1, 0.3}, {0.05, 0.3}, {0.025, 0.3}};
  CHECK(std::abs(fit_order(flat).slope) <= 1e-14);

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<std::pair<double, double>> noisy;
  for (int p = 3; p <= 8; ++p) {
    const double h = std::ldexp(1.0, -p);
    noisy.emplace_back(h, 0.7 * std::pow(h, 2.5) * (1 + u(rng) * 1e-6));
  }
  CHECK(std::abs(fit_order(noisy).slope - 2.5) <= 1e-4);

  const std::vector<std::pair<double, double>> two{{0.5, 0.1}, {0.25, 0.05}};
  CHECK_THROWS_AS(fit_order(two), DomainError);
  const std::vector<std::pair<double, double>> bad{{0.5, 0.1}, {0.25, 0.0}, {0.125, 0.01}};
  CHECK_THROWS_AS(fit_order(bad), DomainError);
}

TEST_CASE("config parsing and validation") {
  const ExperimentConfig c = parse_config(kSmall1D);
  CHECK(c.grid.nx == 15);
  CHECK(c.grid.extent_x == doctest::Approx(2 * std::numbers::pi));
  CHECK(c.fine_per_coarse(c.coarse_dt) == 4);
  CHECK(c.coarse_steps(c.coarse_dt) == 8);
  CHECK(std::holds_alternative<StandardBM>(c.noise));

  const ExperimentConfig d = parse_config(kSmall2D);
  CHECK(d.grid.nx == 9);
  CHECK(d.grid.ny == 9);
  const auto& s = std::get<TraceClassSeries>(d.noise);
  CHECK(s.a == 2.0);
  CHECK(s.n_modes == 20);

  CHECK(config_error_field(with(kSmall1D, "dT", "0.1")) == "dT");
  CHECK(config_error_field(with(kSmall1D, "T_end", "0.3")) == "T_end");
  CHECK(config_error_field(with(kSmall1D, "mc_samples", "0")) == "mc_samples");
  CHECK(config_error_field(with(kSmall1D, "sigma_list", "[-1]")) == "sigma_list");
  CHECK(config_error_field(with(kSmall1D, "problem", "\"TM3D\"")) == "problem");
  CHECK(config_error_field(with(kSmall1D, "grid", "{ \"nx\": 1 }")) == "grid.nx");
  CHECK(config_error_field(with(kSmall1D, "noise", "{ \"kind\": \"pink\" }")) == "noise.kind");
  CHECK(config_error_field(with(kSmall1D, "K", "\"many\"")) == "K");
  CHECK(config_error_field("{ \"name\": ") == "<document>");
  CHECK(config_error_field("{ \"name\": \"x\" }") == "grid");
  CHECK_THROWS_AS(load_config("/nonexistent/parawell.json"), IoError);

  // Serialized configs parse back to the same document.
  CHECK(config_to_json(parse_config(config_to_json(d))) == config_to_json(d));
}

TEST_CASE("shipped configs are valid") {
  for (const auto& entry : std::filesystem::directory_iterator(PARAWELL_CONFIG_DIR)) {
    if (entry.path().extension() != ".json") continue;
    CAPTURE(entry.path().string());
    CHECK_NOTHROW(load_config(entry.path()));
  }
}

TEST_CASE("initial conditions") {
  const GridPtr line = share(Grid::line(2 * std::numbers::pi, 15, 4.0, 1.0));
  const FieldState u = initial_condition(Problem::TM1D, line);
  CHECK(u.at(0, 3) == doctest::Approx(std::sin(line->x(3))));
  CHECK(u.at(1, 3) == doctest::Approx(-2.0 * std::sin(line->x(3))));
  const GridPtr plane = share(Grid::plane(1.0, 1.0, 9, 9));
  const FieldState v = initial_condition(Problem::TM2D, plane);
  const double x = plane->x(2), y = plane->y(5), pi = std::numbers::pi;
  CHECK(v.at(0, 2, 5) == doctest::Approx(std::sin(3 * pi * x) * std::sin(4 * pi * y)));
  CHECK(v.at(1, 2, 5) == doctest::Approx(-0.8 * std::cos(3 * pi * x) * std::sin(4 * pi * y)));
  CHECK_THROWS_AS(initial_condition(Problem::TM2D, line), DimensionError);
}

TEST_CASE("converge-iters reaches finite termination") {
  ExperimentConfig c = parse_config(kSmall1D);
  c.mc_samples = 1;
  const ResultTable t = run_converge_iters(c);
  for (double sigma : c.sigma_list) {
    const auto curve = t.curve(sigma, 1.0, c.coarse_dt);
    REQUIRE(curve.size() == 9);
    CHECK(curve.back() <= 1e-10);
    CHECK(curve.back() <= curve.front());
  }
  for (const ErrorRow& r : t.errors) {
    CHECK(std::isfinite(r.error));
    CHECK(r.error >= 0.0);
    if (r.k < 8) CHECK(r.bound == doctest::Approx(bound_envelope(r.k, 8, 0.125)));
    else CHECK(std::isnan(r.bound));
  }
}

TEST_CASE("zero noise matches a deterministic dense parareal") {
  ExperimentConfig c = parse_config(kSmall1D);
  c.sigma_list = {0.0};
  c.lambda_list = {0.0};
  c.iterations = 2;
  c.drift = Drift::affine_test(-2.0, 0.0);
  const auto curve = run_converge_iters(c).curve(0.0, 0.0, c.coarse_dt);

  // Independent oracle: explicit matrices for the coarse and fine maps.
  const GridPtr g = make_grid(c);
  const FieldState u0 = initial_condition(c.problem, g);
  const auto op = assemble(g);
  const Eigen::MatrixXd a(op.matrix());
  const Eigen::Index n = a.rows();
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(n, n);
  const Eigen::MatrixXd gmap = (c.coarse_dt * a).exp() * (1 - 2.0 * c.coarse_dt) * id;
  const Eigen::MatrixXd step = (c.fine_dt * a).exp() * (1 - 2.0 * c.fine_dt);
  Eigen::MatrixXd fmap = id;
  for (int j = 0; j < 4; ++j) fmap = step * fmap;
  const int N = 8;
  std::vector<Eigen::VectorXd> ref(N + 1, u0.values()), it(N + 1, u0.values());
  for (int k = 1; k <= N; ++k) {
    ref[k] = fmap * ref[k - 1];
    it[k] = gmap * it[k - 1];
  }
  auto err = [&](const std::vector<Eigen::VectorXd>& u) {
    double sup = 0.0;
    for (int k = 0; k <= N; ++k) sup = std::max(sup, weighted_norm(FieldState(g, u[k] - ref[k])));
    return sup;
  };
  std::vector<double> oracle{err(it)};
  for (int k = 1; k <= 2; ++k) {
    std::vector<Eigen::VectorXd> next(N + 1, u0.values());
    for (int m = 1; m <= N; ++m) next[m] = fmap * it[m - 1] + gmap * next[m - 1] - gmap * it[m - 1];
    it = next;
    oracle.push_back(err(it));
  }
  for (int k = 0; k <= 2; ++k) CHECK(std::abs(curve[k] - oracle[k]) <= 1e-12);
  CHECK(curve[1] > 1e-8);
}

TEST_CASE("converge-order fits slopes per k") {
  ExperimentConfig c = parse_config(kSmall1D);
  c.coarse_dt_list = {0.25, 0.125};
  CHECK_THROWS_AS(run_converge_order(c), ConfigError);
  c.coarse_dt_list = {0.25, 0.125, 0.0625};
  c.fine_dt = 0.015625;
  c.order_iterations = {0, 1, 2};
  c.drift = Drift::affine_test(-4.0);
  const ResultTable t = run_converge_order(c);
  CHECK(t.slopes.size() == 6);
  CHECK(t.slope(2.0, 1.0, 1).slope > t.slope(2.0, 1.0, 0).slope);
  const auto& s = t.slope(2.0, 1.0, 2);
  std::vector<std::pair<double, double>> pts;
  for (double h : c.coarse_dt_list) pts.emplace_back(h, t.curve(2.0, 1.0, h)[2]);
  CHECK(fit_order(pts).slope == s.slope);
}

TEST_CASE("noise impact") {
  const ExperimentConfig c = parse_config(kSmall2D);
  const ResultTable t = run_noise_impact(c);
  CHECK(t.roughness_for(0.0) == 0.0);
  CHECK(t.roughness_for(2.0) < t.roughness_for(8.0));
  CHECK(t.roughness_for(8.0) < t.roughness_for(32.0));

  ExperimentConfig other = c;
  other.master_seed = 6;
  const ResultTable u = run_noise_impact(other);
  std::vector<double> a, b;
  for (const auto& r : t.snapshots) if (r.lambda == 0.0) a.push_back(r.value);
  for (const auto& r : u.snapshots) if (r.lambda == 0.0) b.push_back(r.value);
  CHECK(a == b);
  CHECK(t.roughness_for(32.0) != u.roughness_for(32.0));

  ExperimentConfig oned = parse_config(kSmall1D);
  CHECK_THROWS_AS(run_noise_impact(oned), ConfigError);
}

TEST_CASE("replay is byte identical") {
  const ExperimentConfig c = parse_config(kSmall1D);
  const auto d1 = scratch("replay1"), d2 = scratch("replay2");
  write_outputs(run_converge_iters(c), c, ExperimentKind::ConvergeIters, d1);
  write_outputs(run_converge_iters(c), c, ExperimentKind::ConvergeIters, d2);
  CHECK(slurp(d1 / "errors.csv") == slurp(d2 / "errors.csv"));
  CHECK(slurp(d1 / "errors.svg") == slurp(d2 / "errors.svg"));
  CHECK(std::filesystem::exists(d1 / "timing.csv"));
  CHECK(std::filesystem::exists(d1 / "config.json"));
  std::filesystem::remove_all(d1);
  std::filesystem::remove_all(d2);
}

TEST_CASE("SVG points decode to the CSV values") {
  const ExperimentConfig c = parse_config(kSmall1D);
  const ResultTable t = run_converge_iters(c);
  const auto dir = scratch("svg");
  write_outputs(t, c, ExperimentKind::ConvergeIters, dir);

  std::vector<Series> series;
  for (double sigma : c.sigma_list) {
    Series s{"", {}};
    const auto curve = t.curve(sigma, 1.0, c.coarse_dt);
    for (std::size_t k = 0; k < curve.size(); ++k) s.points.emplace_back(double(k), curve[k]);
    series.push_back(s);
  }
  const Axes axes{"", "k", "error", false, true};
  const PlotFrame frame(series, axes);

  const std::string svg = slurp(dir / "errors.svg");
  const std::regex poly("<polyline[^>]*points=\"([^\"]*)\"");
  std::size_t which = 0;
  for (auto it = std::sregex_iterator(svg.begin(), svg.end(), poly); it != std::sregex_iterator();
       ++it, ++which) {
    REQUIRE(which < series.size());
    std::istringstream pts((*it)[1].str());
    std::string pair;
    std::size_t idx = 0;
    while (pts >> pair) {
      const auto comma = pair.find(',');
      const auto [x, y] = frame.from_pixel(std::stod(pair.substr(0, comma)), std::stod(pair.substr(comma + 1)));
      // Skip over points the chart could not place (zero errors on a log axis).
      while (!frame.plottable(series[which].points[idx].first, series[which].points[idx].second)) ++idx;
      const auto [xe, ye] = series[which].points[idx];
      CHECK(x == doctest::Approx(xe).epsilon(1e-4));
      CHECK(std::abs(std::log10(y) - std::log10(ye)) <= 1e-4);
      ++idx;
    }
  }
  CHECK(which == series.size());
  std::filesystem::remove_all(dir);
}
