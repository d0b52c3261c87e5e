#include "stfem/adaptivity.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace stfem {

std::vector<double> estimate(const OcpProblem& problem, const OcpSolution& solution,
                             const TargetSpec& reference, int depth) {
  ErrorQuadrature quad = default_error_quadrature(reference);
  quad.depth = depth;
  const std::vector<double> values = state_on_vertices(problem, solution);
  std::vector<double> eta = element_errors_squared(*problem.mesh, values, reference, quad, problem.threads);
  for (double& e : eta) e = std::sqrt(std::max(0.0, e));
  return eta;
}

std::vector<double> estimate(const OcpProblem& problem, const OcpSolution& solution, int depth) {
  return estimate(problem, solution, error_target_for(problem.target), depth);
}

std::vector<int> mark_dorfler(std::span<const double> eta, double theta) {
  if (!(theta > 0.0 && theta <= 1.0)) throw std::invalid_argument("Doerfler parameter must lie in (0, 1]");
  std::vector<int> order(eta.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (eta[a] != eta[b]) return eta[a] > eta[b];
    return a < b;
  });
  double total = 0.0;
  for (int k : order) total += eta[k] * eta[k];
  std::vector<int> marked;
  if (total == 0.0) return marked;
  const double goal = theta * total;
  double sum = 0.0;
  for (int k : order) {
    marked.push_back(k);
    sum += eta[k] * eta[k];
    if (sum >= goal) break;
  }
  return marked;
}

AdaptState adapt_loop(const AdaptConfig& config, const AdaptCallback& on_level) {
  if (config.initial_cells < 1) throw std::invalid_argument("initial cells must be positive");
  if (!(config.theta > 0.0 && config.theta <= 1.0)) throw std::invalid_argument("theta must lie in (0, 1]");
  if (config.fixed_rho && !(*config.fixed_rho > 0.0)) throw std::invalid_argument("rho must be positive");
  const TargetSpec target = make_target(config.target, config.dim, config.noise_delta);
  const TargetSpec reference = error_target_for(target);

  AdaptState state;
  state.dim = config.dim;
  auto mesh = std::make_shared<const Mesh>(build_kuhn_mesh(config.dim, config.initial_cells));
  for (int level = 0; level < config.max_levels; ++level) {
    const auto start = std::chrono::steady_clock::now();
    AdaptLevel info;
    info.level = level;
    info.simplices = mesh->num_simplices();
    info.h_min = mesh->h_axis_min();
    info.rho = config.fixed_rho ? *config.fixed_rho : info.h_min * info.h_min;
    if (config.audit_meshes) info.mesh_audit_ok = audit_mesh(*mesh).ok();

    const OcpProblem problem = build_problem(mesh, info.rho, target, config.threads);
    info.dofs_X = problem.dof_x.count();
    info.dofs_Y = problem.dof_y.count();
    info.dofs_total = info.dofs_X + info.dofs_Y;
    const OcpSolution solution = solve(problem, config.solver);
    info.iterations = solution.report.iterations;
    info.converged = solution.report.converged;
    ErrorQuadrature quad = default_error_quadrature(reference);
    if (config.error_depth) quad.depth = *config.error_depth;
    info.error_L2 = l2_error(problem, solution, reference, quad);
    info.state_L2 = state_l2_norm(problem, solution);

    const std::vector<double> eta = estimate(problem, solution, reference, config.estimator_depth);
    double total = 0.0;
    for (double e : eta) total += e * e;
    info.indicator_total = std::sqrt(total);

    std::vector<int> marked;
    const bool last = info.dofs_total > config.max_dofs || !info.converged || level + 1 == config.max_levels;
    if (!last) marked = mark_dorfler(eta, config.theta);
    info.marked_count = marked.size();
    info.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    state.levels.push_back(info);
    if (on_level) on_level(info);

    if (!info.converged) {
      state.stop_reason = "solver did not converge";
      break;
    }
    if (info.dofs_total > config.max_dofs) {
      state.stop_reason = "dof budget exceeded";
      break;
    }
    if (marked.empty()) {
      state.stop_reason = last ? "level cap reached" : "nothing to refine";
      break;
    }
    mesh = std::make_shared<const Mesh>(refine_bisection(*mesh, marked));
  }
  if (state.stop_reason.empty()) state.stop_reason = "level cap reached";
  state.final_mesh = mesh;
  return state;
}

std::vector<StudyRow> to_study_rows(const AdaptState& state) {
  std::vector<StudyRow> rows;
  for (const AdaptLevel& a : state.levels) {
    StudyRow row;
    row.level = a.level;
    row.h = a.h_min;
    row.rho = a.rho;
    row.dofs_total = a.dofs_total;
    row.dofs_X = a.dofs_X;
    row.dofs_Y = a.dofs_Y;
    row.error_L2 = a.error_L2;
    row.iterations = a.iterations;
    row.wall_time = a.wall_time;
    row.converged = a.converged;
    row.state_L2 = a.state_L2;
    row.mesh_audit_ok = a.mesh_audit_ok;
    if (!rows.empty() && rows.back().error_L2 > 0.0 && a.error_L2 > 0.0 &&
        rows.back().dofs_total != a.dofs_total) {
      // Rate with respect to N^{-1/d}, the effective mesh size on adaptive meshes.
      const double ratio = static_cast<double>(a.dofs_total) / static_cast<double>(rows.back().dofs_total);
      row.eoc = std::log(rows.back().error_L2 / a.error_L2) / (std::log(ratio) / state.dim);
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace stfem
