#include "doctest.h"

#include "parawell/errors.hpp"
#include "parawell/qwiener.hpp"

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <vector>

using namespace parawell;

namespace {

NoiseSpec bm(double le = 1.0, double lh = 1.0) { return NoiseSpec(StandardBM{}, le, lh); }

NoiseSpec series(int modes, double a = 2.0, double le = 1.0, double lh = 1.0, bool shared = true) {
  return NoiseSpec(TraceClassSeries{a, 0.5, 0.001, modes}, le, lh, shared);
}

bool bitwise_equal(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

}  // namespace

TEST_CASE("spec validation and shape") {
  CHECK_THROWS_AS(NoiseSpec(TraceClassSeries{2.0, 0.5, 0.0, 10}, 1, 1), DomainError);
  CHECK_THROWS_AS(NoiseSpec(TraceClassSeries{2.0, -0.1, 0.001, 10}, 1, 1), DomainError);
  CHECK_THROWS_AS(NoiseSpec(TraceClassSeries{2.0, 0.5, 0.001, 0}, 1, 1), DomainError);
  CHECK_THROWS_AS(NoiseSpec(TraceClassSeries{0.0, 0.5, 0.001, 5}, 1, 1), DomainError);
  CHECK(bm().width() == 1);
  CHECK(series(100).width() == 100);
  CHECK(series(7, 2.0, 1, 1, false).width() == 14);
}

TEST_CASE("sample_path is deterministic in the seed") {
  for (const NoiseSpec& spec : {bm(), series(10), series(5, 2.0, 1, 1, false)}) {
    const WienerPath a = sample_path(spec, 42, 8, 4, 0.01);
    const WienerPath b = sample_path(spec, 42, 8, 4, 0.01);
    const WienerPath c = sample_path(spec, 43, 8, 4, 0.01);
    CHECK(std::memcmp(a.increments().data(), b.increments().data(),
                      a.increments().size() * sizeof(double)) == 0);
    CHECK(a.increments() != c.increments());
    CHECK(a.increments().size() == std::size_t(8 * 4 * spec.width()));
  }
}

TEST_CASE("pooled increment variance matches dt") {
  const double dt = std::ldexp(1.0, -8);
  const WienerPath p = sample_path(bm(), 7, 1000, 100, dt);
  const auto& x = p.increments();
  REQUIRE(x.size() == 100000);
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= x.size();
  double var = 0.0;
  for (double v : x) var += (v - mean) * (v - mean);
  var /= x.size() - 1;
  // Var of the sample variance of normals is 2σ⁴/(n-1).
  const double se = dt * std::sqrt(2.0 / (x.size() - 1));
  CHECK(std::abs(var - dt) <= 3 * se);
  CHECK(std::abs(mean) <= 3 * std::sqrt(dt / x.size()));
}

TEST_CASE("per-mode variance and step independence") {
  const double dt = 0.01;
  const int steps = 20000;
  const WienerPath p = sample_path(series(4), 11, steps, 1, dt);
  for (int mode = 0; mode < 4; ++mode) {
    double s2 = 0.0;
    for (int n = 1; n <= steps; ++n) s2 += std::pow(p.fine_increment(n, 1)[mode], 2);
    const double var = s2 / steps;
    CHECK(std::abs(var - dt) <= 3 * dt * std::sqrt(2.0 / steps));
  }
  double cov = 0.0, s0 = 0.0, s1 = 0.0;
  for (int n = 1; n < steps; ++n) {
    const double a = p.fine_increment(n, 1)[0];
    const double b = p.fine_increment(n + 1, 1)[0];
    cov += a * b;
    s0 += a * a;
    s1 += b * b;
  }
  CHECK(std::abs(cov / std::sqrt(s0 * s1)) <= 3.0 / std::sqrt(steps - 1.0));
}

TEST_CASE("eigenvalues and the truncated trace") {
  const TraceClassSeries s{2.0, 0.5, 0.001, 100};
  CHECK(eigenvalue(s, 1) == 1.0);
  CHECK(eigenvalue(s, 2) == doctest::Approx(std::pow(2.0, -2.001)).epsilon(1e-15));
  const double zeta = std::riemann_zeta(2.001);
  double prev = 0.0;
  for (int m : {1, 2, 10, 100, 1000}) {
    const TraceClassSeries t{2.0, 0.5, 0.001, m};
    const double tr = truncated_trace(t);
    CHECK(tr > prev);
    CHECK(tr < zeta);
    CHECK(trace_remainder(t) == doctest::Approx(zeta - tr).epsilon(1e-12));
    prev = tr;
  }
  CHECK(trace_remainder(s) < 1e-2 * truncated_trace(s));
}

TEST_CASE("coarse increments are exact left-to-right sums") {
  const WienerPath fixed(0, 1, 4, 0.25, 1, {0.1, -0.2, 0.05, 0.05});
  CHECK(coarse_increment(fixed, 1)[0] == 0.0);

  const WienerPath single = sample_path(series(3), 5, 6, 1, 0.1);
  for (int n = 1; n <= 6; ++n) {
    const auto c = coarse_increment(single, n);
    const auto f = single.fine_increment(n, 1);
    for (int m = 0; m < 3; ++m) CHECK(bitwise_equal(c[m], f[m]));
  }

  const WienerPath p = sample_path(series(5), 9, 6, 7, 0.01);
  for (int n = 1; n <= 6; ++n) {
    const auto c = coarse_increment(p, n);
    for (int m = 0; m < 5; ++m) {
      double sum = 0.0;
      for (int j = 1; j <= 7; ++j) sum += p.fine_increment(n, j)[m];
      CHECK(bitwise_equal(c[m], sum));
    }
  }
  CHECK_THROWS_AS(coarse_increment(p, 0), IndexError);
  CHECK_THROWS_AS(coarse_increment(p, 7), IndexError);
  CHECK_THROWS_AS(p.fine_increment(1, 8), IndexError);
}

TEST_CASE("regroup and coarsen keep the same Brownian path") {
  const WienerPath p = sample_path(bm(), 3, 4, 8, 0.125 / 8);
  const WienerPath q = regroup(p, 8, 4);
  CHECK(q.increments() == p.increments());
  CHECK(q.n_coarse() == 8);
  CHECK_THROWS_AS(regroup(p, 5, 5), MeshError);

  const WienerPath c = coarsen(p, 4);
  CHECK(c.n_fine_per_coarse() == 2);
  CHECK(c.dt_fine() == doctest::Approx(4 * p.dt_fine()));
  for (int n = 1; n <= 4; ++n) {
    CHECK(c.fine_increment(n, 1)[0] + c.fine_increment(n, 2)[0] ==
          doctest::Approx(coarse_increment(p, n)[0]).epsilon(1e-14));
  }
  CHECK_THROWS_AS(coarsen(p, 3), MeshError);

  // The same seed on a regrouped mesh produces the same fine increments.
  const WienerPath r = sample_path(bm(), 3, 8, 4, 0.125 / 8);
  CHECK(r.increments() == p.increments());
}

TEST_CASE("sample seeds are distinct and reproducible") {
  CHECK(sample_seed(1, 0) == sample_seed(1, 0));
  CHECK(sample_seed(1, 0) != sample_seed(1, 1));
  CHECK(sample_seed(1, 0) != sample_seed(2, 0));
}

TEST_CASE("standard BM injection is a constant field") {
  const GridPtr g = share(Grid::line(1.0, 5));
  const NoiseInjector inj(bm(2.0, -0.5), g);
  const double dw = 0.3;
  const FieldState u = inj.inject(std::span<const double>(&dw, 1));
  for (int i = 0; i < 5; ++i) {
    CHECK(u.at(0, i) == doctest::Approx(0.6));
    CHECK(u.at(1, i) == doctest::Approx(-0.15));
  }
}

TEST_CASE("trace-class injection") {
  // x = 1 is node i = 1 when extent = 2, nx = 3.
  const GridPtr g = share(Grid::line(2.0, 3));
  const FieldState one = inject_noise(series(1), g, 0, std::vector<double>{1.0});
  CHECK(one.at(0, 1) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(one.at(1, 1) == doctest::Approx(1.0).epsilon(1e-15));

  const FieldState zero = inject_noise(series(4), g, 0, std::vector<double>(4, 0.0));
  CHECK(zero.values().isZero(0.0));
  const FieldState silent =
      inject_noise(series(4, 2.0, 0.0, 0.0), g, 3, std::vector<double>{1, -2, 3, 4});
  CHECK(silent.values().isZero(0.0));

  // Two modes at an arbitrary node against the series written out by hand.
  const GridPtr g2 = share(Grid::plane(1.0, 1.0, 4, 3));
  const std::vector<double> db{0.7, -1.3};
  const FieldState u = inject_noise(series(2, 2.0, 3.0, 0.5), g2, 0, db);
  for (int j = 0; j < 3; ++j)
    for (int i = 0; i < 4; ++i) {
      const double x = g2->x(i);
      double s = 0.0;
      for (int n = 1; n <= 2; ++n)
        s += std::sqrt(2.0 / 2.0) * std::pow(n, -2.001 / 2) * std::sin(n * std::numbers::pi * x / 2.0) *
             db[n - 1];
      CHECK(u.at(0, i, j) == doctest::Approx(3.0 * s).epsilon(1e-14));
      CHECK(u.at(1, i, j) == doctest::Approx(0.5 * s).epsilon(1e-14));
      CHECK(u.at(2, i, j) == doctest::Approx(0.5 * s).epsilon(1e-14));
    }

  CHECK_THROWS_AS(inject_noise(series(4), g, 0, std::vector<double>(3, 0.0)), NoiseShapeError);
  CHECK_THROWS_AS(inject_noise(bm(), g, 0, std::vector<double>(2, 0.0)), NoiseShapeError);
}

TEST_CASE("independent E and H channels") {
  const GridPtr g = share(Grid::line(2.0, 3));
  const FieldState u = inject_noise(series(1, 2.0, 1.0, 1.0, false), g, 0, std::vector<double>{1.0, 0.0});
  CHECK(u.at(0, 1) == doctest::Approx(1.0));
  CHECK(u.at(1, 1) == 0.0);
}

TEST_CASE("path files round-trip exactly") {
  const NoiseSpec spec = series(6);
  const WienerPath p = sample_path(spec, 77, 3, 5, 0.02);
  const auto file = std::filesystem::temp_directory_path() / "parawell_test_path.bin";
  save_path(file, p, spec);
  const WienerPath q = load_path(file);
  CHECK(q.seed() == 77);
  CHECK(q.n_coarse() == 3);
  CHECK(q.n_fine_per_coarse() == 5);
  CHECK(q.dt_fine() == 0.02);
  CHECK(q.width() == 6);
  CHECK(std::memcmp(p.increments().data(), q.increments().data(),
                    p.increments().size() * sizeof(double)) == 0);

  {
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    out << "NOTAPATH";
  }
  CHECK_THROWS_AS(load_path(file), IoError);
  std::filesystem::remove(file);
  CHECK_THROWS_AS(load_path(file), IoError);
}
