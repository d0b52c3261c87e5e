#pragma once

#include <memory>
#include <string>
#include <vector>

#include "stfem/assembly.hpp"
#include "stfem/dofmap.hpp"
#include "stfem/mesh.hpp"
#include "stfem/solvers.hpp"
#include "stfem/targets.hpp"

namespace stfem {

/// Discrete optimality system for one mesh, target and regularization.
struct OcpProblem {
  std::shared_ptr<const Mesh> mesh;
  double rho = 1.0;
  TargetSpec target;
  DofMap dof_x;
  DofMap dof_y;
  AssembledOperators ops;
  int threads = 1;

  /// Same operators with a different rho; nothing is reassembled.
  [[nodiscard]] OcpProblem with_rho(double new_rho) const;
  /// Right-hand side (0; -f) of the block system ordered [p; u].
  [[nodiscard]] std::vector<double> block_rhs() const;
  [[nodiscard]] SparseMatrix block_matrix() const;
};

OcpProblem build_problem(std::shared_ptr<const Mesh> mesh, double rho, const TargetSpec& target,
                         int threads = 1);
OcpProblem build_problem(Mesh mesh, double rho, const TargetSpec& target, int threads = 1);

enum class SolveMethod { SaddleGmresIlu0, SchurCg, DenseLu };
const char* to_string(SolveMethod method);
SolveMethod parse_solve_method(const std::string& name);

struct SolveOptions {
  SolveMethod method = SolveMethod::SaddleGmresIlu0;
  GmresOptions gmres{};
  /// Outer CG on (rho S + M) u = f.
  CgOptions schur{1e-10, 10000};
  /// Inner CG for A p = B u.
  CgOptions inner{1e-12, 10000};
  /// Block residual the saddle solve must reach, relative to ||f||. GMRES is
  /// restarted on the residual until it is met (at most `max_corrections` times).
  double block_residual_tol = 1e-6;
  int max_corrections = 4;
};

struct OcpSolution {
  std::vector<double> u;        ///< state on X_h
  std::vector<double> p;        ///< adjoint on Y_h
  std::vector<double> z_dual;   ///< control as a load vector on Y_h: -A p / rho
  std::vector<double> z_nodal;  ///< mass-lifted nodal control: M_Y z = z_dual
  SolveReport report;
  SolveMethod method = SolveMethod::SaddleGmresIlu0;
  /// ||A p / rho + B u|| / ||f|| and ||B^T p - M u + f|| / ||f||.
  double residual_adjoint = 0.0;
  double residual_state = 0.0;
  std::vector<std::string> warnings;
};

/// Solves the block system. Non-convergence is reported through
/// report.converged; the last iterate is returned.
OcpSolution solve(const OcpProblem& problem, const SolveOptions& options = {});
OcpSolution solve(const OcpProblem& problem, SolveMethod method);

/// Block residuals of (u, p) relative to ||f|| (absolute when f = 0).
std::pair<double, double> block_residuals(const OcpProblem& problem, std::span<const double> u,
                                          std::span<const double> p);

/// B^T p with A p = B u solved by CG to relative residual `tol`.
std::vector<double> apply_S_tilde(const OcpProblem& problem, std::span<const double> u,
                                  double tol = 1e-10);

/// Reduced cost 1/2 u^T (rho S + M) u - f^T u and its gradient.
double reduced_cost(const OcpProblem& problem, std::span<const double> u);
std::vector<double> reduced_gradient(const OcpProblem& problem, std::span<const double> u);

/// State field on all vertices (zero on constrained vertices).
std::vector<double> state_on_vertices(const OcpProblem& problem, const OcpSolution& solution);
std::vector<double> adjoint_on_vertices(const OcpProblem& problem, const OcpSolution& solution);
std::vector<double> control_on_vertices(const OcpProblem& problem, const OcpSolution& solution);

/// P1 interpolation of the state at a point of the closed cylinder. Throws
/// std::out_of_range outside.
double evaluate_state(const OcpProblem& problem, const OcpSolution& solution, const Point& x);

}  // namespace stfem
