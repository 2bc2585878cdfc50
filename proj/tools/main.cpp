#include <cstdio>
#include <exception>
#include <string>

#include "CLI11.hpp"

#include "bregmm/pipeline.hpp"

namespace {

struct CommandOpts {
  std::string config_path;
  std::string out_dir;
  std::string majorant;
  std::uint64_t seed = 0;
  int max_iters = 0;
  double wall_budget_s = 0.0;
  CLI::Option* seed_opt = nullptr;
  CLI::Option* iters_opt = nullptr;
  CLI::Option* wall_opt = nullptr;
};

void add_common(CLI::App* sub, CommandOpts& opts, bool out_required) {
  sub->add_option("--config", opts.config_path, "JSON config file (defaults used if omitted)");
  auto* out = sub->add_option("--out", opts.out_dir, "Output directory");
  if (out_required) out->required();
  opts.seed_opt = sub->add_option("--seed", opts.seed, "Override noise.seed");
  opts.iters_opt = sub->add_option("--max-iters", opts.max_iters, "Override solver.max_iters");
  opts.wall_opt =
      sub->add_option("--wall-budget-s", opts.wall_budget_s, "Override solver.wall_budget_s");
}

bregmm::RunConfig build_config(const CommandOpts& opts) {
  bregmm::RunConfig config = opts.config_path.empty() ? bregmm::default_config()
                                                      : bregmm::load_config(opts.config_path);
  if (opts.seed_opt->count() > 0) config.noise.seed = opts.seed;
  if (opts.iters_opt->count() > 0) {
    if (opts.max_iters < 0) throw bregmm::ConfigError("config: --max-iters must be >= 0");
    config.solver.max_iters = opts.max_iters;
  }
  if (opts.wall_opt->count() > 0) config.solver.wall_budget_s = opts.wall_budget_s;
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Poisson tomography bench: Bregman majorization solvers"};
  app.require_subcommand(1);

  CommandOpts sim_opts, rec_opts, bench_opts, check_opts;
  CLI::App* sim = app.add_subcommand("simulate", "Generate phantom, sinogram and dataset");
  add_common(sim, sim_opts, true);
  CLI::App* rec = app.add_subcommand("reconstruct", "Reconstruct from simulated artifacts");
  add_common(rec, rec_opts, true);
  rec->add_option("--majorant", rec_opts.majorant,
                  "maj1|maj4|maj5|maj6|maj8|mlem (overrides solver.majorant)");
  CLI::App* bench = app.add_subcommand("benchmark", "Run the configured majorants head to head");
  add_common(bench, bench_opts, true);
  CLI::App* check = app.add_subcommand("check", "Property checks on the configured problem");
  add_common(check, check_opts, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (sim->parsed()) return bregmm::cmd_simulate(build_config(sim_opts), sim_opts.out_dir);
    if (rec->parsed()) {
      return bregmm::cmd_reconstruct(build_config(rec_opts), rec_opts.out_dir,
                                     rec_opts.majorant);
    }
    if (bench->parsed()) return bregmm::cmd_benchmark(build_config(bench_opts), bench_opts.out_dir);
    if (check->parsed()) return bregmm::cmd_check(build_config(check_opts), check_opts.out_dir);
  } catch (const bregmm::ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
  return 0;
}
