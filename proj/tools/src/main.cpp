#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "stfem_cli/commands.hpp"
#include "stfem_cli/config.hpp"

namespace {

using namespace stfem::cli;

struct Flags {
  std::string config;
  std::string out;
  int threads = 0;
  std::vector<std::string> formats;
  std::size_t max_dofs = 0;
};

void add_common(CLI::App* sub, Flags& flags) {
  sub->add_option("--config", flags.config, "Experiment config file")->required();
  sub->add_option("--out", flags.out, "Output directory (overrides output_dir)");
  sub->add_option("--threads", flags.threads, "Worker threads (overrides threads)");
  sub->add_option("--format", flags.formats, "csv|json|gnuplot|vtk; repeatable")
      ->check(CLI::IsMember({"csv", "json", "gnuplot", "vtk"}));
  sub->add_option("--max-dofs", flags.max_dofs, "Unknown budget for adaptivity; skips larger uniform levels");
}

int run_with_config(const Flags& flags, std::optional<StudyKind> expected,
                    int (*command)(const ExperimentConfig&, std::ostream&, std::ostream&)) {
  try {
    ExperimentConfig config = load_config(flags.config);
    if (expected && config.study != *expected) {
      std::cerr << "config declares study = " << to_string(config.study)
                << "; use the matching subcommand or 'run'\n";
      return kConfigError;
    }
    Overrides o;
    if (!flags.out.empty()) o.out_dir = flags.out;
    if (flags.threads != 0) o.threads = flags.threads;
    o.formats = flags.formats;
    if (flags.max_dofs != 0) o.max_dofs = flags.max_dofs;
    apply(config, o);
    return command(config, std::cout, std::cerr);
  } catch (const ConfigError& e) {
    std::cerr << e.what() << '\n';
    return kConfigError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid configuration: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kNotConverged;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Space-time finite element solver for parabolic optimal control with energy regularization"};
  app.require_subcommand(1);

  Flags flags;
  auto* study = app.add_subcommand("study", "Uniform convergence study");
  auto* noise = app.add_subcommand("noise", "Noisy-target study with h = 16 delta^2");
  auto* adapt = app.add_subcommand("adapt", "Adaptive refinement loop");
  auto* solve = app.add_subcommand("solve", "Single solve on Kuhn(dimension, cells)");
  auto* run = app.add_subcommand("run", "Run whatever study the config declares");
  for (auto* sub : {study, noise, adapt, solve, run}) add_common(sub, flags);

  int dim = 3;
  int cells = 4;
  auto* info = app.add_subcommand("mesh-info", "Statistics and audit of a Kuhn mesh");
  info->add_option("--dimension", dim, "Space-time dimension")->check(CLI::Range(2, 4));
  info->add_option("--cells", cells, "Cells per axis")->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);

  if (*study) return run_with_config(flags, StudyKind::Convergence, cmd_study);
  if (*noise) return run_with_config(flags, StudyKind::Noise, cmd_noise);
  if (*adapt) return run_with_config(flags, StudyKind::Adaptive, cmd_adapt);
  if (*solve) return run_with_config(flags, StudyKind::Solve, cmd_solve);
  if (*run) return run_with_config(flags, std::nullopt, cmd_run);
  try {
    return cmd_mesh_info(dim, cells, std::cout);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfigError;
  }
}
