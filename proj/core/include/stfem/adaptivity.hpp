#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "stfem/analysis.hpp"
#include "stfem/mesh.hpp"
#include "stfem/ocp.hpp"

namespace stfem {

/// eta_K = ||target - u_h||_{L2(K)} evaluated with depth-`depth` subdivided
/// quadrature against `reference`.
std::vector<double> estimate(const OcpProblem& problem, const OcpSolution& solution,
                             const TargetSpec& reference, int depth = 4);
std::vector<double> estimate(const OcpProblem& problem, const OcpSolution& solution, int depth = 4);

/// Smallest prefix of the elements sorted by decreasing eta (ties by id)
/// carrying theta of sum eta^2. Throws std::invalid_argument unless 0 < theta <= 1.
std::vector<int> mark_dorfler(std::span<const double> eta, double theta = 0.5);

struct AdaptConfig {
  int dim = 3;
  std::string target = "cube";
  double noise_delta = 0.0;
  int initial_cells = 4;
  double theta = 0.5;
  std::size_t max_dofs = 100000;
  int max_levels = 200;
  std::optional<double> fixed_rho;  ///< default: rho = h_min^2 per level
  int estimator_depth = 4;
  SolveOptions solver{};
  std::optional<int> error_depth;
  int threads = 1;
  bool audit_meshes = true;
};

struct AdaptLevel {
  int level = 0;
  std::size_t simplices = 0;
  std::size_t dofs_total = 0;
  std::size_t dofs_X = 0;
  std::size_t dofs_Y = 0;
  double h_min = 0.0;
  double rho = 0.0;
  double error_L2 = 0.0;
  double indicator_total = 0.0;  ///< sqrt(sum eta^2)
  std::size_t marked_count = 0;
  int iterations = 0;
  bool converged = false;
  double state_L2 = 0.0;
  double wall_time = 0.0;
  bool mesh_audit_ok = true;
};

struct AdaptState {
  int dim = 0;
  std::vector<AdaptLevel> levels;
  std::shared_ptr<const Mesh> final_mesh;
  std::string stop_reason;
};

using AdaptCallback = std::function<void(const AdaptLevel&)>;

/// Solve, estimate, mark, refine until the dof count exceeds max_dofs, the
/// level cap is hit, or a solve fails.
AdaptState adapt_loop(const AdaptConfig& config, const AdaptCallback& on_level = {});

/// Adaptive levels as study rows (h = h_min; eoc with respect to dofs^{-1/d}).
std::vector<StudyRow> to_study_rows(const AdaptState& state);

}  // namespace stfem
