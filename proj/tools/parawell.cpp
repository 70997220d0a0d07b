// parawell: parareal experiments for damped stochastic Maxwell equations.
//
//   parawell converge-iters|converge-order|noise-impact|solve --config <file>
//            [--out <dir>] [--seed S] [--samples M] [--threads P]
//
// Exit codes: 0 success, 2 config error, 3 numerical failure, 4 I/O error.

#include "parawell/errors.hpp"
#include "parawell/experiment.hpp"

#include "CLI11.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

#include <chrono>
#include <iostream>
#include <optional>

namespace {

constexpr int kConfigError = 2;
constexpr int kNumericalError = 3;
constexpr int kIoError = 4;

void print_summary(const parawell::ResultTable& table, parawell::ExperimentKind kind) {
  using parawell::ExperimentKind;
  if (kind == ExperimentKind::ConvergeOrder) {
    for (const auto& s : table.slopes) {
      std::cout << "  sigma=" << s.sigma << " lambda=" << s.lambda << " k=" << s.k
                << " slope=" << s.slope << " residual=" << s.residual << '\n';
    }
    return;
  }
  if (kind == ExperimentKind::NoiseImpact) {
    for (const auto& r : table.roughness) {
      std::cout << "  lambda=" << r.lambda << " roughness=" << r.roughness << '\n';
    }
  }
  for (const auto& r : table.errors) {
    std::cout << "  sigma=" << r.sigma << " lambda=" << r.lambda << " dT=" << r.coarse_dt
              << " k=" << r.k << " error=" << r.error << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Parareal solver for damped stochastic Maxwell equations"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> samples;
  std::optional<int> threads;

  struct Command {
    const char* name;
    const char* help;
    parawell::ExperimentKind kind;
  };
  const Command commands[] = {
      {"converge-iters", "Mean-square error vs iteration for a damping/noise sweep",
       parawell::ExperimentKind::ConvergeIters},
      {"converge-order", "Mean-square order in the coarse step per iteration",
       parawell::ExperimentKind::ConvergeOrder},
      {"noise-impact", "E_z snapshots and roughness across noise scales",
       parawell::ExperimentKind::NoiseImpact},
      {"solve", "Single parareal solve", parawell::ExperimentKind::Solve},
  };
  std::vector<std::pair<CLI::App*, parawell::ExperimentKind>> subcommands;
  for (const Command& c : commands) {
    CLI::App* sub = app.add_subcommand(c.name, c.help);
    sub->add_option("--config", config_path, "Experiment configuration (JSON)")->required();
    sub->add_option("--out", out_dir, "Output directory (default: config 'outputs')");
    sub->add_option("--seed", seed, "Override the master seed");
    sub->add_option("--samples", samples, "Override the Monte Carlo sample count");
    sub->add_option("--threads", threads, "Worker threads (default: available parallelism)");
    subcommands.emplace_back(sub, c.kind);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigError;
  }

  parawell::ExperimentKind kind = parawell::ExperimentKind::Solve;
  for (const auto& [sub, k] : subcommands) {
    if (sub->parsed()) kind = k;
  }

  try {
    parawell::ExperimentConfig config = parawell::load_config(config_path);
    if (seed) config.master_seed = *seed;
    if (samples) config.mc_samples = *samples;
    if (!out_dir.empty()) config.outputs = out_dir;
    config.validate();
    if (threads) {
      if (*threads < 1) throw parawell::ConfigError("--threads", "must be >= 1");
#ifdef _OPENMP
      omp_set_num_threads(*threads);
#endif
    }

    const auto start = std::chrono::steady_clock::now();
    const parawell::ResultTable table = parawell::run_experiment(config, kind);
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    parawell::write_outputs(table, config, kind, config.outputs);

    std::cout << config.name << ": done in " << seconds << " s, outputs in " << config.outputs
              << '\n';
    print_summary(table, kind);
    return 0;
  } catch (const parawell::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const parawell::IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return kIoError;
  } catch (const parawell::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumericalError;
  } catch (const parawell::Error& e) {
    // Remaining library errors stem from invalid parameters.
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  }
}
