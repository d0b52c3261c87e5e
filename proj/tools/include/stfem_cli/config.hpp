#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "stfem/adaptivity.hpp"
#include "stfem/analysis.hpp"

namespace stfem::cli {

enum class StudyKind { Convergence, Noise, Adaptive, Solve };
const char* to_string(StudyKind kind);

/// Parsed experiment file. Every key has a default except `dimension` and
/// `target`; see README for the key table.
struct ExperimentConfig {
  std::string name = "experiment";
  StudyKind study = StudyKind::Convergence;
  int dimension = 3;
  std::string target = "smooth";
  std::vector<int> levels;
  int cells = 4;
  Coupling coupling = Coupling::RhoEqH2;
  std::optional<double> rho;
  std::vector<double> noise_levels;
  double noise_delta = 0.0;
  SolveMethod method = SolveMethod::SaddleGmresIlu0;
  double gmres_tol = 1e-8;
  int gmres_restart = 100;
  int gmres_maxit = 10000;
  std::optional<int> error_depth;
  int estimator_depth = 4;
  double theta = 0.5;
  int initial_cells = 4;
  std::size_t max_dofs = 100000;
  int max_levels = 200;
  std::string output_dir = "results";
  std::vector<std::string> formats{"csv", "json"};
  int threads = 1;
  double slice_time = 0.5;

  bool operator==(const ExperimentConfig&) const = default;
};

struct ConfigIssue {
  int line = 0;  ///< 0 for file-level problems such as a missing key
  std::string message;
};

/// Carries every problem found in a config, not just the first.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<ConfigIssue> issues);
  [[nodiscard]] const std::vector<ConfigIssue>& issues() const { return issues_; }

 private:
  std::vector<ConfigIssue> issues_;
};

/// Flat `key = value` lines, `#` comments, comma-separated lists. Numbers may
/// be written as `2^-3.5`. Throws ConfigError.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

/// Text that parse_config maps back to an equal config.
std::string serialize(const ExperimentConfig& config);

/// Parses a real, accepting `base^exponent`. Empty on malformed input.
std::optional<double> parse_number(const std::string& text);

StudyConfig to_study_config(const ExperimentConfig& config);
AdaptConfig to_adapt_config(const ExperimentConfig& config);
SolveOptions to_solve_options(const ExperimentConfig& config);

}  // namespace stfem::cli
