#include "stfem/analysis.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <mutex>
#include <stdexcept>

#include "stfem/parallel.hpp"
#include "stfem/quadrature.hpp"

namespace stfem {

namespace {

using Clock = std::chrono::steady_clock;

const QuadRule& error_rule(int dim, int order) {
  if (order <= (dim == 4 ? 3 : 4)) return rule(dim, order);
  static std::mutex mutex;
  static std::map<std::pair<int, int>, QuadRule> cache;
  std::lock_guard lock(mutex);
  auto it = cache.find({dim, order});
  if (it == cache.end()) it = cache.emplace(std::make_pair(dim, order), gauss_jacobi_rule(dim, (order + 2) / 2)).first;
  return it->second;
}

std::string format(const char* fmt, double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, value);
  return buf;
}

}  // namespace

ErrorQuadrature default_error_quadrature(const TargetSpec& target) {
  switch (target.smoothness) {
    case SmoothnessClass::H2: return {target.dim == 4 ? 5 : 4, 0};
    case SmoothnessClass::H32: return {2, 3};
    case SmoothnessClass::H12: return {2, 6};
  }
  return {2, 0};
}

std::vector<double> element_errors_squared(const Mesh& mesh, std::span<const double> vertex_values,
                                           const TargetSpec& target, const ErrorQuadrature& quad,
                                           int threads) {
  if (vertex_values.size() != mesh.num_vertices()) {
    throw std::invalid_argument("element_errors_squared: one value per vertex expected");
  }
  const int dim = mesh.dim();
  const QuadRule& base = error_rule(dim, quad.order);
  const int depth = target.needs_subdivision() ? quad.depth : 0;
  const SmoothnessProbe* probe = target.smooth_on ? &target.smooth_on : nullptr;
  std::vector<double> out(mesh.num_simplices(), 0.0);
  parallel_for(mesh.num_simplices(), threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t k = begin; k < end; ++k) {
      const auto corners = mesh.corners(k);
      const Simplex& s = mesh.simplices()[k];
      std::array<double, kMaxDim + 1> nodal{};
      for (int i = 0; i <= dim; ++i) nodal[i] = vertex_values[s.v[i]];
      double sum = 0.0;
      for_each_subdivided_point(
          std::span<const Point>(corners.data(), dim + 1), dim, depth, base,
          [&](const Point& x, const Barycentric& lambda, double w) {
            double uh = 0.0;
            for (int i = 0; i <= dim; ++i) uh += lambda[i] * nodal[i];
            const double e = uh - target(x);
            sum += w * e * e;
          },
          probe);
      out[k] = sum;
    }
  });
  return out;
}

double l2_error(const Mesh& mesh, std::span<const double> vertex_values, const TargetSpec& target,
                const ErrorQuadrature& quad, int threads) {
  double total = 0.0;
  for (double e : element_errors_squared(mesh, vertex_values, target, quad, threads)) total += e;
  return std::sqrt(total);
}

double l2_error(const OcpProblem& problem, const OcpSolution& solution, const TargetSpec& target,
                const ErrorQuadrature& quad) {
  const std::vector<double> values = state_on_vertices(problem, solution);
  return l2_error(*problem.mesh, values, target, quad, problem.threads);
}

double l2_error(const OcpProblem& problem, const OcpSolution& solution, const TargetSpec& target,
                int depth) {
  ErrorQuadrature quad = default_error_quadrature(target);
  quad.depth = depth;
  return l2_error(problem, solution, target, quad);
}

double state_l2_norm(const OcpProblem& problem, const OcpSolution& solution) {
  std::vector<double> mu(solution.u.size());
  problem.ops.M.multiply(solution.u, mu, problem.threads);
  return std::sqrt(std::max(0.0, dot(solution.u, mu)));
}

double target_l2_norm(const TargetSpec& target) {
  if (target.l2_norm) return *target.l2_norm;
  const Mesh mesh = build_kuhn_mesh(target.dim, 8);
  const std::vector<double> zero(mesh.num_vertices(), 0.0);
  return l2_error(mesh, zero, target, default_error_quadrature(target));
}

std::vector<double> eoc(std::span<const double> errors, double h_ratio) {
  std::vector<double> h(errors.size());
  double value = 1.0;
  for (double& x : h) {
    x = value;
    value /= h_ratio;
  }
  return eoc(errors, h);
}

std::vector<double> eoc(std::span<const double> errors, std::span<const double> h) {
  if (errors.size() < 2) throw std::invalid_argument("eoc needs at least two errors");
  if (h.size() != errors.size()) throw std::invalid_argument("eoc: one mesh size per error expected");
  for (double e : errors) {
    if (!(e > 0.0)) throw std::invalid_argument("eoc: errors must be positive");
  }
  std::vector<double> out;
  out.reserve(errors.size() - 1);
  for (std::size_t l = 1; l < errors.size(); ++l) {
    out.push_back(std::log(errors[l - 1] / errors[l]) / std::log(h[l - 1] / h[l]));
  }
  return out;
}

const char* to_string(Coupling coupling) {
  switch (coupling) {
    case Coupling::RhoEqH2: return "rho_eq_h2";
    case Coupling::FixedRho: return "fixed_rho";
    case Coupling::Noise: return "noise";
  }
  return "?";
}

int noise_cells(double delta) {
  if (!(delta > 0.0)) throw std::invalid_argument("noise level must be positive");
  const double m = 1.0 / (16.0 * delta * delta);
  const double k = std::round(std::log2(m));
  if (k < 0 || std::abs(m - std::exp2(k)) > 1e-9 * m) {
    throw std::invalid_argument("16 delta^2 must be a power 2^-k, k >= 0");
  }
  return static_cast<int>(std::exp2(k));
}

void validate(const StudyConfig& config) {
  if (config.dim < 2 || config.dim > kMaxDim) throw std::invalid_argument("dimension must be 2, 3 or 4");
  if (config.coupling == Coupling::Noise) {
    if (config.noise_deltas.empty()) throw std::invalid_argument("noise study needs noise levels");
    for (double delta : config.noise_deltas) noise_cells(delta);
  } else if (config.levels.empty()) {
    throw std::invalid_argument("study needs at least one level");
  }
  for (int m : config.levels) {
    if (m < 1) throw std::invalid_argument("levels must be positive cell counts");
  }
  if (config.coupling == Coupling::FixedRho && !(config.fixed_rho > 0.0)) {
    throw std::invalid_argument("fixed rho must be positive");
  }
  if (config.error_depth && (*config.error_depth < 0 || *config.error_depth > 8)) {
    throw std::invalid_argument("error depth must lie in [0, 8]");
  }
  if (config.threads < 1) throw std::invalid_argument("threads must be positive");
}

TargetSpec error_target_for(const TargetSpec& target) {
  if (target.kind == TargetKind::NoisyIndicator) return cube_indicator(target.dim);
  return target;
}

namespace {

StudyRow run_level(const StudyConfig& config, int level, int m, double rho, const TargetSpec& target,
                   const TargetSpec& reference, double reference_norm) {
  const auto start = Clock::now();
  StudyRow row;
  row.level = level;
  row.m = m;
  row.h = 1.0 / m;
  row.rho = rho;
  row.noise_delta = target.noise_delta;
  row.target_L2 = reference_norm;
  try {
    auto mesh = std::make_shared<const Mesh>(build_kuhn_mesh(config.dim, m));
    row.h_diameter = mesh->h_max();
    if (config.audit_meshes) row.mesh_audit_ok = audit_mesh(*mesh).ok();
    const OcpProblem problem = build_problem(mesh, rho, target, config.threads);
    row.dofs_X = problem.dof_x.count();
    row.dofs_Y = problem.dof_y.count();
    row.dofs_total = row.dofs_X + row.dofs_Y;
    const OcpSolution solution = solve(problem, config.solver);
    row.iterations = solution.report.iterations;
    row.converged = solution.report.converged;
    row.block_residual = solution.report.true_relative_residual;
    ErrorQuadrature quad = default_error_quadrature(reference);
    if (config.error_depth) quad.depth = *config.error_depth;
    row.error_L2 = l2_error(problem, solution, reference, quad);
    row.state_L2 = state_l2_norm(problem, solution);
    if (!row.converged) row.message = "solver did not converge";
  } catch (const std::exception& e) {
    row.converged = false;
    row.message = e.what();
  }
  row.wall_time = std::chrono::duration<double>(Clock::now() - start).count();
  return row;
}

void attach_eoc(std::vector<StudyRow>& rows) {
  if (rows.size() < 2) return;
  const StudyRow& prev = rows[rows.size() - 2];
  StudyRow& cur = rows.back();
  if (prev.error_L2 > 0.0 && cur.error_L2 > 0.0 && prev.h != cur.h) {
    cur.eoc = std::log(prev.error_L2 / cur.error_L2) / std::log(prev.h / cur.h);
  }
}

}  // namespace

std::vector<StudyRow> run_study(const StudyConfig& config, const RowCallback& on_row) {
  if (config.coupling == Coupling::Noise) return run_noise_study(config, on_row);
  validate(config);
  const TargetSpec target = make_target(config.target, config.dim);
  const TargetSpec reference = error_target_for(target);
  const double reference_norm = target_l2_norm(reference);
  std::vector<StudyRow> rows;
  for (std::size_t l = 0; l < config.levels.size(); ++l) {
    const int m = config.levels[l];
    const double h = 1.0 / m;
    const double rho = config.coupling == Coupling::FixedRho ? config.fixed_rho : h * h;
    rows.push_back(run_level(config, static_cast<int>(l), m, rho, target, reference, reference_norm));
    attach_eoc(rows);
    if (on_row) on_row(rows.back());
  }
  return rows;
}

std::vector<StudyRow> run_noise_study(const StudyConfig& config, const RowCallback& on_row) {
  StudyConfig checked = config;
  checked.coupling = Coupling::Noise;
  validate(checked);
  std::vector<StudyRow> rows;
  double reference_norm = -1.0;
  for (std::size_t l = 0; l < config.noise_deltas.size(); ++l) {
    const double delta = config.noise_deltas[l];
    const int m = noise_cells(delta);
    const double h = 1.0 / m;
    const TargetSpec target = make_target("noisy", config.dim, delta);
    const TargetSpec reference = error_target_for(target);
    if (reference_norm < 0.0) reference_norm = target_l2_norm(reference);
    rows.push_back(run_level(config, static_cast<int>(l), m, h * h, target, reference, reference_norm));
    attach_eoc(rows);
    if (on_row) on_row(rows.back());
  }
  return rows;
}

void write_csv_header(std::ostream& out) { out << kCsvHeader << '\n'; }

void write_csv_row(std::ostream& out, const StudyRow& row) {
  out << row.level << ',' << format("%.17g", row.h) << ',' << format("%.17g", row.rho) << ','
      << row.dofs_total << ',' << row.dofs_X << ',' << row.dofs_Y << ',' << format("%.10e", row.error_L2)
      << ',' << (row.eoc ? format("%.6f", *row.eoc) : std::string()) << ',' << row.iterations << ','
      << format("%.3f", row.wall_time) << '\n';
}

void write_csv(std::ostream& out, std::span<const StudyRow> rows) {
  write_csv_header(out);
  for (const StudyRow& row : rows) write_csv_row(out, row);
}

void write_gnuplot(std::ostream& out, std::span<const StudyRow> rows) {
  out << "# log2(h) log2(error_L2)\n";
  for (const StudyRow& row : rows) {
    if (row.error_L2 > 0.0) {
      out << format("%.10g", std::log2(row.h)) << ' ' << format("%.10g", std::log2(row.error_L2)) << '\n';
    }
  }
}

void write_table(std::ostream& out, std::span<const StudyRow> rows) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%5s %12s %12s %10s %14s %7s %6s %9s\n", "level", "h", "rho", "dofs",
                "error_L2", "eoc", "iter", "time[s]");
  out << buf;
  for (const StudyRow& row : rows) {
    const std::string e = row.eoc ? format("%7.2f", *row.eoc) : std::string(7, ' ');
    std::snprintf(buf, sizeof buf, "%5d %12.6g %12.6g %10zu %14.4e %s %6d %9.2f%s\n", row.level, row.h,
                  row.rho, row.dofs_total, row.error_L2, e.c_str(), row.iterations, row.wall_time,
                  row.message.empty() ? "" : ("  " + row.message).c_str());
    out << buf;
  }
}

}  // namespace stfem
