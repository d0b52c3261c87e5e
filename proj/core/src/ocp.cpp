#include "stfem/ocp.hpp"

#include <chrono>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <tuple>

#include "stfem/locator.hpp"

namespace stfem {

namespace {

using Clock = std::chrono::steady_clock;

void check_problem(const OcpProblem& problem) {
  if (!(problem.rho > 0.0)) throw std::invalid_argument("rho must be positive");
  const auto nx = static_cast<int>(problem.dof_x.count());
  const auto ny = static_cast<int>(problem.dof_y.count());
  const auto& ops = problem.ops;
  if (ops.A.rows() != ny || ops.A.cols() != ny || ops.B.rows() != ny || ops.B.cols() != nx ||
      ops.M.rows() != nx || ops.M.cols() != nx || static_cast<int>(ops.f.size()) != nx) {
    throw std::invalid_argument("operator dimensions do not match the dof maps");
  }
}

/// CG on A with an ILU(0) preconditioner; A is symmetric so ILU(0) is its
/// incomplete Cholesky factorization.
class StiffnessSolver {
 public:
  StiffnessSolver(const SparseMatrix& a, int threads) : op_(as_operator(a, threads)) {
    try {
      ilu_.emplace(a);
      precond_ = ilu_->as_operator();
    } catch (const PreconditionerBreakdown&) {
      precond_ = jacobi_preconditioner(a);
    }
  }

  SolveResult<std::vector<double>> solve(std::span<const double> rhs, const CgOptions& options) const {
    return cg(op_, rhs, options, &precond_);
  }

 private:
  LinearOperator op_;
  std::optional<Ilu0> ilu_;
  LinearOperator precond_;
};

OcpSolution solve_saddle(const OcpProblem& problem, const SolveOptions& options, bool use_lu) {
  const std::size_t ny = problem.dof_y.count();
  const std::size_t nx = problem.dof_x.count();
  const SparseMatrix k = problem.block_matrix();
  const std::vector<double> rhs = problem.block_rhs();
  OcpSolution sol;
  sol.method = use_lu ? SolveMethod::DenseLu : SolveMethod::SaddleGmresIlu0;

  std::vector<double> x(ny + nx, 0.0);
  if (use_lu) {
    const auto start = Clock::now();
    x = dense_lu_solve(k, rhs);
    sol.report.iterations = 1;
    sol.report.converged = true;
    sol.report.wall_time = std::chrono::duration<double>(Clock::now() - start).count();
  } else {
    std::optional<Ilu0> ilu;
    LinearOperator precond;
    try {
      ilu.emplace(k);
      precond = ilu->as_operator();
    } catch (const PreconditionerBreakdown& e) {
      sol.warnings.emplace_back(std::string(e.what()) + "; falling back to unpreconditioned GMRES");
    }
    const LinearOperator op = as_operator(k, problem.threads);
    const double f_norm = norm2(problem.ops.f);
    std::vector<double> residual = rhs;
    for (int round = 0; round <= options.max_corrections; ++round) {
      auto step = gmres(op, precond ? &precond : nullptr, residual, options.gmres);
      for (std::size_t i = 0; i < x.size(); ++i) x[i] += step.x[i];
      SolveReport& r = sol.report;
      r.iterations += step.report.iterations;
      r.wall_time += step.report.wall_time;
      r.preconditioned = step.report.preconditioned;
      if (round == 0) {
        r.achieved_relative_residual = step.report.achieved_relative_residual;
        r.converged = step.report.converged;
      }
      if (!step.report.converged) {
        r.converged = false;
        break;
      }
      k.multiply(x, residual, problem.threads);
      for (std::size_t i = 0; i < x.size(); ++i) residual[i] = rhs[i] - residual[i];
      if (f_norm == 0.0 || norm2(residual) <= options.block_residual_tol * f_norm) break;
    }
  }
  sol.p.assign(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(ny));
  sol.u.assign(x.begin() + static_cast<std::ptrdiff_t>(ny), x.end());
  return sol;
}

OcpSolution solve_schur(const OcpProblem& problem, const SolveOptions& options) {
  const std::size_t ny = problem.dof_y.count();
  const std::size_t nx = problem.dof_x.count();
  const auto& ops = problem.ops;
  const StiffnessSolver inner(ops.A, problem.threads);
  int inner_iterations = 0;
  bool inner_ok = true;
  const LinearOperator schur = [&](std::span<const double> u, std::span<double> out) {
    std::vector<double> bu(ny);
    ops.B.multiply(u, bu, problem.threads);
    const auto p = inner.solve(bu, options.inner);
    inner_iterations += p.report.iterations;
    inner_ok = inner_ok && p.report.converged;
    std::vector<double> mu(nx);
    ops.B.multiply_transpose(p.x, out);
    ops.M.multiply(u, mu, problem.threads);
    for (std::size_t i = 0; i < nx; ++i) out[i] = problem.rho * out[i] + mu[i];
  };
  auto outer = cg(schur, ops.f, options.schur);

  OcpSolution sol;
  sol.method = SolveMethod::SchurCg;
  sol.report = outer.report;
  sol.report.converged = outer.report.converged && inner_ok;
  sol.u = std::move(outer.x);
  // Recover p from A p = B u, then p_saddle = -rho p so that A p / rho + B u = 0.
  std::vector<double> bu(ny);
  ops.B.multiply(sol.u, bu, problem.threads);
  auto p = inner.solve(bu, options.inner);
  sol.p = std::move(p.x);
  for (double& v : sol.p) v *= -problem.rho;
  if (!inner_ok) sol.warnings.emplace_back("inner stiffness solve did not converge");
  return sol;
}

void recover_control(const OcpProblem& problem, OcpSolution& sol) {
  const std::size_t ny = problem.dof_y.count();
  sol.z_dual.assign(ny, 0.0);
  problem.ops.A.multiply(sol.p, sol.z_dual, problem.threads);
  for (double& v : sol.z_dual) v *= -1.0 / problem.rho;
  const SparseMatrix m_y = Assembler(*problem.mesh, problem.threads).mass(problem.dof_y, problem.dof_y);
  const LinearOperator jacobi = jacobi_preconditioner(m_y);
  auto lift = cg(as_operator(m_y, problem.threads), sol.z_dual, {1e-12, 10000}, &jacobi);
  if (!lift.report.converged) sol.warnings.emplace_back("control mass lift did not converge");
  sol.z_nodal = std::move(lift.x);
}

}  // namespace

OcpProblem OcpProblem::with_rho(double new_rho) const {
  if (!(new_rho > 0.0)) throw std::invalid_argument("rho must be positive");
  OcpProblem copy = *this;
  copy.rho = new_rho;
  return copy;
}

std::vector<double> OcpProblem::block_rhs() const {
  std::vector<double> rhs(dof_y.count() + dof_x.count(), 0.0);
  for (std::size_t i = 0; i < ops.f.size(); ++i) rhs[dof_y.count() + i] = -ops.f[i];
  return rhs;
}

SparseMatrix OcpProblem::block_matrix() const {
  return assemble_block(BlockSaddle{&ops.A, &ops.B, &ops.M, rho});
}

OcpProblem build_problem(std::shared_ptr<const Mesh> mesh, double rho, const TargetSpec& target,
                         int threads) {
  if (!mesh) throw std::invalid_argument("build_problem: null mesh");
  if (!(rho > 0.0)) throw std::invalid_argument("rho must be positive");
  if (target.dim != mesh->dim()) throw std::invalid_argument("target dimension does not match the mesh");
  DofMap dx = build_dofmap(*mesh, SpaceRole::X);
  DofMap dy = build_dofmap(*mesh, SpaceRole::Y);
  AssembledOperators ops = assemble_operators(*mesh, dx, dy, target, threads);
  OcpProblem problem{std::move(mesh), rho, target, std::move(dx), std::move(dy), std::move(ops), threads};
  check_problem(problem);
  return problem;
}

OcpProblem build_problem(Mesh mesh, double rho, const TargetSpec& target, int threads) {
  return build_problem(std::make_shared<const Mesh>(std::move(mesh)), rho, target, threads);
}

const char* to_string(SolveMethod method) {
  switch (method) {
    case SolveMethod::SaddleGmresIlu0: return "saddle_gmres_ilu0";
    case SolveMethod::SchurCg: return "schur_cg";
    case SolveMethod::DenseLu: return "dense_lu";
  }
  return "?";
}

SolveMethod parse_solve_method(const std::string& name) {
  if (name == "saddle_gmres_ilu0") return SolveMethod::SaddleGmresIlu0;
  if (name == "schur_cg") return SolveMethod::SchurCg;
  if (name == "dense_lu") return SolveMethod::DenseLu;
  throw std::invalid_argument("unknown solve method '" + name + "'");
}

OcpSolution solve(const OcpProblem& problem, const SolveOptions& options) {
  check_problem(problem);
  OcpSolution sol;
  switch (options.method) {
    case SolveMethod::SaddleGmresIlu0: sol = solve_saddle(problem, options, false); break;
    case SolveMethod::DenseLu: sol = solve_saddle(problem, options, true); break;
    case SolveMethod::SchurCg: sol = solve_schur(problem, options); break;
  }
  recover_control(problem, sol);
  std::tie(sol.residual_adjoint, sol.residual_state) = block_residuals(problem, sol.u, sol.p);
  const double block = std::hypot(sol.residual_adjoint, sol.residual_state);
  sol.report.true_relative_residual = block;
  return sol;
}

OcpSolution solve(const OcpProblem& problem, SolveMethod method) {
  SolveOptions options;
  options.method = method;
  return solve(problem, options);
}

std::pair<double, double> block_residuals(const OcpProblem& problem, std::span<const double> u,
                                          std::span<const double> p) {
  const std::size_t ny = problem.dof_y.count();
  const std::size_t nx = problem.dof_x.count();
  const auto& ops = problem.ops;
  std::vector<double> r1(ny), tmp_y(ny), r2(nx), tmp_x(nx);
  ops.A.multiply(p, r1, problem.threads);
  ops.B.multiply(u, tmp_y, problem.threads);
  for (std::size_t i = 0; i < ny; ++i) r1[i] = r1[i] / problem.rho + tmp_y[i];
  ops.B.multiply_transpose(p, r2);
  ops.M.multiply(u, tmp_x, problem.threads);
  for (std::size_t i = 0; i < nx; ++i) r2[i] += ops.f[i] - tmp_x[i];
  double scale = norm2(ops.f);
  if (scale == 0.0) scale = 1.0;
  return {norm2(r1) / scale, norm2(r2) / scale};
}

std::vector<double> apply_S_tilde(const OcpProblem& problem, std::span<const double> u, double tol) {
  const std::size_t ny = problem.dof_y.count();
  if (u.size() != problem.dof_x.count()) throw std::invalid_argument("apply_S_tilde: size mismatch");
  std::vector<double> bu(ny);
  problem.ops.B.multiply(u, bu, problem.threads);
  const StiffnessSolver inner(problem.ops.A, problem.threads);
  auto p = inner.solve(bu, {tol, 10000});
  if (!p.report.converged) throw SolverError("apply_S_tilde: inner solve did not converge");
  std::vector<double> out(u.size());
  problem.ops.B.multiply_transpose(p.x, out);
  return out;
}

double reduced_cost(const OcpProblem& problem, std::span<const double> u) {
  const std::vector<double> su = apply_S_tilde(problem, u, 1e-13);
  std::vector<double> mu(u.size());
  problem.ops.M.multiply(u, mu, problem.threads);
  double quad = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) quad += u[i] * (problem.rho * su[i] + mu[i]);
  return 0.5 * quad - dot(problem.ops.f, u);
}

std::vector<double> reduced_gradient(const OcpProblem& problem, std::span<const double> u) {
  std::vector<double> g = apply_S_tilde(problem, u, 1e-13);
  std::vector<double> mu(u.size());
  problem.ops.M.multiply(u, mu, problem.threads);
  for (std::size_t i = 0; i < u.size(); ++i) g[i] = problem.rho * g[i] + mu[i] - problem.ops.f[i];
  return g;
}

std::vector<double> state_on_vertices(const OcpProblem& problem, const OcpSolution& solution) {
  return problem.dof_x.prolongate(solution.u);
}

std::vector<double> adjoint_on_vertices(const OcpProblem& problem, const OcpSolution& solution) {
  return problem.dof_y.prolongate(solution.p);
}

std::vector<double> control_on_vertices(const OcpProblem& problem, const OcpSolution& solution) {
  return problem.dof_y.prolongate(solution.z_nodal);
}

double evaluate_state(const OcpProblem& problem, const OcpSolution& solution, const Point& x) {
  const PointLocator locator(*problem.mesh);
  const std::vector<double> values = state_on_vertices(problem, solution);
  return interpolate(*problem.mesh, locator, values, x);
}

}  // namespace stfem
