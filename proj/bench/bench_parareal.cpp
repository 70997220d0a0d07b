// Serial reference schedule vs OpenMP fine sweeps, and the Monte Carlo loop
// at one thread vs all threads.

#include "parawell/experiment.hpp"
#include "parawell/parareal.hpp"

#include <benchmark/benchmark.h>
#include <omp.h>

#include <numbers>

using namespace parawell;

namespace {

struct Fixture {
  GridPtr grid;
  PropagatorConfig coarse, fine;
  FieldState u0;
  WienerPath path;
};

Fixture make_fixture(int n) {
  const GridPtr grid = share(Grid::plane(1.0, 1.0, n, n));
  const NoiseSpec spec(TraceClassSeries{}, 1.0, 1.0);
  const auto op = std::make_shared<const MaxwellOperator>(assemble_2d_tm(grid, 2.0));
  const auto noise = std::make_shared<const NoiseInjector>(spec, grid);
  const double dT = 1.0 / 32, dt = dT / 4;
  return {grid, make_propagator(op, noise, dT), make_propagator(op, noise, dt),
          initial_condition(Problem::TM2D, grid), sample_path(spec, 1, 32, 4, dt)};
}

void BM_Parareal(benchmark::State& state) {
  static const Fixture f = make_fixture(39);
  const Schedule schedule = state.range(0) == 0 ? Schedule::Serial : Schedule::Parallel;
  const Trajectory ref = reference_solve(f.fine, f.u0, f.path);
  for (auto _ : state) {
    const ParaRealRun run =
        parareal_solve(f.coarse, f.fine, f.u0, f.path, {.iterations = 4, .schedule = schedule}, &ref);
    benchmark::DoNotOptimize(run.squared_errors.back().back());
  }
  state.SetLabel(schedule == Schedule::Serial ? "serial" : "openmp");
}
BENCHMARK(BM_Parareal)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_MonteCarlo(benchmark::State& state) {
  ExperimentConfig c;
  c.name = "bench";
  c.grid = {2 * std::numbers::pi, 0.0, 63, 0, 1.0, 1.0};
  c.sigma_list = {2.0};
  c.coarse_dt = 1.0 / 32;
  c.fine_dt = 1.0 / 128;
  c.iterations = 6;
  c.mc_samples = 8;
  const int saved = omp_get_max_threads();
  omp_set_num_threads(state.range(0) == 0 ? 1 : saved);
  for (auto _ : state) {
    const ResultTable t = run_converge_iters(c);
    benchmark::DoNotOptimize(t.errors.back().error);
  }
  omp_set_num_threads(saved);
  state.SetLabel(state.range(0) == 0 ? "1 thread" : std::to_string(saved) + " threads");
}
BENCHMARK(BM_MonteCarlo)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
