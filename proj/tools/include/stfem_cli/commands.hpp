#pragma once

#include <cstddef>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "stfem_cli/config.hpp"

namespace stfem::cli {

enum ExitCode : int { kOk = 0, kConfigError = 1, kNotConverged = 2 };

/// Command-line values that take precedence over the config file.
struct Overrides {
  std::optional<std::string> out_dir;
  std::optional<int> threads;
  std::vector<std::string> formats;
  /// Caps adaptive refinement; for uniform and noise studies, levels with more
  /// unknowns are skipped.
  std::optional<std::size_t> max_dofs;
};

/// Applies overrides; throws ConfigError for invalid values.
void apply(ExperimentConfig& config, const Overrides& overrides);

/// Unknowns in X_h plus Y_h on Kuhn(dim, m): (m-1)^(dim-1) (2m + 1).
std::size_t uniform_dofs(int dim, int m);

int cmd_study(const ExperimentConfig& config, std::ostream& out, std::ostream& err);
int cmd_noise(const ExperimentConfig& config, std::ostream& out, std::ostream& err);
int cmd_adapt(const ExperimentConfig& config, std::ostream& out, std::ostream& err);
int cmd_solve(const ExperimentConfig& config, std::ostream& out, std::ostream& err);
int cmd_mesh_info(int dim, int cells, std::ostream& out);

/// Dispatches on config.study.
int cmd_run(const ExperimentConfig& config, std::ostream& out, std::ostream& err);

/// Output file for a format: <output_dir>/<name>.<csv|json|dat|vtk>.
std::string output_path(const ExperimentConfig& config, const std::string& format);

}  // namespace stfem::cli
