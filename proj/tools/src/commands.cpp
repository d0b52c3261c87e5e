#include "stfem_cli/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "stfem/adaptivity.hpp"
#include "stfem/analysis.hpp"
#include "stfem/mesh.hpp"
#include "stfem/ocp.hpp"
#include "stfem/vtk.hpp"

namespace stfem::cli {

namespace {

using nlohmann::json;

bool wants(const ExperimentConfig& config, const std::string& format) {
  return std::find(config.formats.begin(), config.formats.end(), format) != config.formats.end();
}

std::ofstream open_output(const ExperimentConfig& config, const std::string& format) {
  std::filesystem::create_directories(config.output_dir);
  const std::string path = output_path(config, format);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  return out;
}

json to_json(const ExperimentConfig& c) {
  json j;
  j["name"] = c.name;
  j["study"] = to_string(c.study);
  j["dimension"] = c.dimension;
  j["target"] = c.target;
  j["levels"] = c.levels;
  j["cells"] = c.cells;
  j["coupling"] = to_string(c.coupling);
  j["rho"] = c.rho ? json(*c.rho) : json(nullptr);
  j["noise_levels"] = c.noise_levels;
  j["noise_delta"] = c.noise_delta;
  j["method"] = to_string(c.method);
  j["gmres_tol"] = c.gmres_tol;
  j["gmres_restart"] = c.gmres_restart;
  j["gmres_maxit"] = c.gmres_maxit;
  j["error_depth"] = c.error_depth ? json(*c.error_depth) : json(nullptr);
  j["estimator_depth"] = c.estimator_depth;
  j["theta"] = c.theta;
  j["initial_cells"] = c.initial_cells;
  j["max_dofs"] = c.max_dofs;
  j["max_levels"] = c.max_levels;
  j["output_dir"] = c.output_dir;
  j["formats"] = c.formats;
  j["threads"] = c.threads;
  j["slice_time"] = c.slice_time;
  return j;
}

json to_json(const StudyRow& r) {
  return {{"level", r.level},
          {"m", r.m},
          {"h", r.h},
          {"h_diameter", r.h_diameter},
          {"rho", r.rho},
          {"noise_delta", r.noise_delta},
          {"dofs_total", r.dofs_total},
          {"dofs_X", r.dofs_X},
          {"dofs_Y", r.dofs_Y},
          {"error_L2", r.error_L2},
          {"eoc", r.eoc ? json(*r.eoc) : json(nullptr)},
          {"iterations", r.iterations},
          {"wall_time_s", r.wall_time},
          {"converged", r.converged},
          {"state_L2", r.state_L2},
          {"target_L2", r.target_L2},
          {"block_residual", r.block_residual},
          {"mesh_audit_ok", r.mesh_audit_ok},
          {"message", r.message}};
}

json document(const ExperimentConfig& config, const std::vector<StudyRow>& rows) {
  json j;
  j["format"] = "stfem-study";
  j["version"] = 1;
  j["config"] = to_json(config);
  j["rows"] = json::array();
  for (const StudyRow& r : rows) j["rows"].push_back(to_json(r));
  return j;
}

void write_rows(const ExperimentConfig& config, const std::vector<StudyRow>& rows, const json& doc) {
  if (wants(config, "csv")) {
    auto out = open_output(config, "csv");
    write_csv(out, rows);
  }
  if (wants(config, "json")) {
    auto out = open_output(config, "json");
    out << doc.dump(2) << '\n';
  }
  if (wants(config, "gnuplot")) {
    auto out = open_output(config, "gnuplot");
    write_gnuplot(out, rows);
  }
}

/// State, adjoint, control and target on the vertices plus the element error.
void write_solution_vtk(const ExperimentConfig& config, const OcpProblem& problem,
                        const OcpSolution& solution) {
  const Mesh& mesh = *problem.mesh;
  const TargetSpec reference = error_target_for(problem.target);
  std::vector<double> target_values(mesh.num_vertices());
  for (std::size_t v = 0; v < mesh.num_vertices(); ++v) target_values[v] = reference(mesh.vertices()[v]);
  const std::vector<VtkField> points{{"state", state_on_vertices(problem, solution)},
                                     {"adjoint", adjoint_on_vertices(problem, solution)},
                                     {"control", control_on_vertices(problem, solution)},
                                     {"target", std::move(target_values)}};
  std::vector<double> err = element_errors_squared(mesh, points[0].values, reference,
                                                   default_error_quadrature(reference), problem.threads);
  for (double& e : err) e = std::sqrt(std::max(0.0, e));
  const std::vector<VtkField> cells{{"element_error", std::move(err)}};
  auto out = open_output(config, "vtk");
  write_vtk(out, mesh, points, cells, config.slice_time, config.name);
}

double rho_for(const ExperimentConfig& config, double h) { return config.rho ? *config.rho : h * h; }

/// Re-solves the finest completed level so its fields can be exported.
void export_level_vtk(const ExperimentConfig& config, const StudyRow& row, const TargetSpec& target) {
  auto mesh = std::make_shared<const Mesh>(build_kuhn_mesh(config.dimension, row.m));
  const OcpProblem problem = build_problem(mesh, row.rho, target, config.threads);
  write_solution_vtk(config, problem, solve(problem, to_solve_options(config)));
}

int finish(const std::vector<StudyRow>& rows, std::ostream& err) {
  bool ok = true;
  for (const StudyRow& r : rows) {
    if (!r.converged) {
      err << "level " << r.level << ": " << (r.message.empty() ? "solver did not converge" : r.message) << '\n';
      ok = false;
    }
  }
  return ok ? kOk : kNotConverged;
}

void print_header(const ExperimentConfig& config, std::ostream& out) {
  out << config.name << ": " << to_string(config.study) << " study, d = " << config.dimension
      << ", target = " << config.target << '\n';
}

}  // namespace

std::string output_path(const ExperimentConfig& config, const std::string& format) {
  const std::string ext = format == "gnuplot" ? "dat" : format;
  return (std::filesystem::path(config.output_dir) / (config.name + "." + ext)).string();
}

void apply(ExperimentConfig& config, const Overrides& o) {
  std::vector<ConfigIssue> issues;
  if (o.out_dir) config.output_dir = *o.out_dir;
  if (o.threads) {
    if (*o.threads < 1) issues.push_back({0, "--threads must be positive"});
    config.threads = *o.threads;
  }
  if (!o.formats.empty()) {
    static const std::set<std::string> known{"csv", "json", "gnuplot", "vtk"};
    config.formats.clear();
    for (const auto& f : o.formats) {
      if (!known.count(f)) issues.push_back({0, "--format: unknown format '" + f + "'"});
      if (std::find(config.formats.begin(), config.formats.end(), f) == config.formats.end()) {
        config.formats.push_back(f);
      }
    }
  }
  if (o.max_dofs) {
    if (*o.max_dofs < 1) issues.push_back({0, "--max-dofs must be positive"});
    config.max_dofs = *o.max_dofs;
    std::erase_if(config.levels, [&](int m) { return uniform_dofs(config.dimension, m) > *o.max_dofs; });
    std::erase_if(config.noise_levels, [&](double delta) {
      try {
        return uniform_dofs(config.dimension, noise_cells(delta)) > *o.max_dofs;
      } catch (const std::exception&) {
        return false;
      }
    });
    if (config.study == StudyKind::Convergence && config.levels.empty()) {
      issues.push_back({0, "--max-dofs leaves no level to run"});
    }
    if (config.study == StudyKind::Noise && config.noise_levels.empty()) {
      issues.push_back({0, "--max-dofs leaves no noise level to run"});
    }
  }
  if (!issues.empty()) throw ConfigError(issues);
}

std::size_t uniform_dofs(int dim, int m) {
  std::size_t interior = 1;
  for (int i = 0; i + 1 < dim; ++i) interior *= static_cast<std::size_t>(std::max(m - 1, 0));
  return interior * static_cast<std::size_t>(2 * m + 1);
}

int cmd_study(const ExperimentConfig& config, std::ostream& out, std::ostream& err) {
  print_header(config, out);
  const StudyConfig study = to_study_config(config);
  const std::vector<StudyRow> rows = run_study(study);
  write_table(out, rows);
  write_rows(config, rows, document(config, rows));
  if (wants(config, "vtk") && !rows.empty() && rows.back().converged) {
    export_level_vtk(config, rows.back(), make_target(config.target, config.dimension));
  }
  return finish(rows, err);
}

int cmd_noise(const ExperimentConfig& config, std::ostream& out, std::ostream& err) {
  print_header(config, out);
  StudyConfig study = to_study_config(config);
  study.coupling = Coupling::Noise;
  const std::vector<StudyRow> rows = run_noise_study(study);
  write_table(out, rows);
  write_rows(config, rows, document(config, rows));
  if (wants(config, "vtk") && !rows.empty() && rows.back().converged) {
    export_level_vtk(config, rows.back(), make_target("noisy", config.dimension, rows.back().noise_delta));
  }
  return finish(rows, err);
}

int cmd_adapt(const ExperimentConfig& config, std::ostream& out, std::ostream& err) {
  print_header(config, out);
  const AdaptConfig adapt = to_adapt_config(config);
  const AdaptState state = adapt_loop(adapt);
  const std::vector<StudyRow> rows = to_study_rows(state);
  write_table(out, rows);
  out << "stopped: " << state.stop_reason << '\n';

  json doc = document(config, rows);
  doc["stop_reason"] = state.stop_reason;
  doc["eoc_reference"] = "dofs^(-1/d)";
  for (std::size_t i = 0; i < state.levels.size(); ++i) {
    const AdaptLevel& a = state.levels[i];
    json& r = doc["rows"][i];
    r["simplices"] = a.simplices;
    r["indicator_total"] = a.indicator_total;
    r["marked_count"] = a.marked_count;
  }
  ExperimentConfig rest = config;
  std::erase(rest.formats, "csv");
  write_rows(rest, rows, doc);
  if (wants(config, "csv")) {
    // Same columns as the uniform studies plus the number of marked elements.
    auto csv = open_output(config, "csv");
    csv << kCsvHeader << ",marked_count\n";
    for (std::size_t i = 0; i < rows.size(); ++i) {
      std::ostringstream line;
      write_csv_row(line, rows[i]);
      std::string text = line.str();
      text.pop_back();
      csv << text << ',' << state.levels[i].marked_count << '\n';
    }
  }

  if (wants(config, "vtk") && !state.levels.empty() && state.levels.back().converged) {
    const TargetSpec target = make_target(config.target, config.dimension, config.noise_delta);
    const OcpProblem problem = build_problem(state.final_mesh, state.levels.back().rho, target, config.threads);
    write_solution_vtk(config, problem, solve(problem, to_solve_options(config)));
  }
  return finish(rows, err);
}

int cmd_solve(const ExperimentConfig& config, std::ostream& out, std::ostream& err) {
  print_header(config, out);
  const TargetSpec target = make_target(config.target, config.dimension, config.noise_delta);
  const TargetSpec reference = error_target_for(target);
  const double h = 1.0 / config.cells;

  StudyRow row;
  row.m = config.cells;
  row.h = h;
  row.rho = rho_for(config, h);
  row.noise_delta = config.noise_delta;
  auto mesh = std::make_shared<const Mesh>(build_kuhn_mesh(config.dimension, config.cells));
  row.h_diameter = mesh->h_max();
  row.mesh_audit_ok = audit_mesh(*mesh).ok();
  const OcpProblem problem = build_problem(mesh, row.rho, target, config.threads);
  row.dofs_X = problem.dof_x.count();
  row.dofs_Y = problem.dof_y.count();
  row.dofs_total = row.dofs_X + row.dofs_Y;
  const OcpSolution solution = solve(problem, to_solve_options(config));
  row.iterations = solution.report.iterations;
  row.converged = solution.report.converged;
  row.wall_time = solution.report.wall_time;
  row.block_residual = solution.report.true_relative_residual;
  ErrorQuadrature quad = default_error_quadrature(reference);
  if (config.error_depth) quad.depth = *config.error_depth;
  row.error_L2 = l2_error(problem, solution, reference, quad);
  row.state_L2 = state_l2_norm(problem, solution);
  row.target_L2 = target_l2_norm(reference);
  if (!row.converged) row.message = "solver did not converge";

  const std::vector<StudyRow> rows{row};
  write_table(out, rows);
  for (const auto& w : solution.warnings) err << "warning: " << w << '\n';

  json doc = document(config, rows);
  doc["solver"] = {{"method", to_string(solution.method)},
                   {"iterations", solution.report.iterations},
                   {"converged", solution.report.converged},
                   {"achieved_relative_residual", solution.report.achieved_relative_residual},
                   {"true_relative_residual", solution.report.true_relative_residual},
                   {"residual_adjoint", solution.residual_adjoint},
                   {"residual_state", solution.residual_state},
                   {"wall_time_s", solution.report.wall_time},
                   {"warnings", solution.warnings}};
  double z_dual_norm = 0.0;
  for (double v : solution.z_dual) z_dual_norm += v * v;
  doc["control"] = {{"z_dual_euclidean_norm", std::sqrt(z_dual_norm)}};
  write_rows(config, rows, doc);
  if (wants(config, "vtk")) write_solution_vtk(config, problem, solution);
  return finish(rows, err);
}

int cmd_mesh_info(int dim, int cells, std::ostream& out) {
  const Mesh mesh = build_kuhn_mesh(dim, cells);
  const MeshAudit audit = audit_mesh(mesh);
  static const char* kNames[] = {"", "", "triangles", "tetrahedra", "pentatopes"};
  double quality = 1.0;
  for (std::size_t k = 0; k < mesh.num_simplices(); ++k) quality = std::min(quality, simplex_quality(mesh, k));
  const DofMap dx = build_dofmap(mesh, SpaceRole::X);
  const DofMap dy = build_dofmap(mesh, SpaceRole::Y);
  char buf[64];
  out << "mesh: Kuhn(" << dim << ", " << cells << ")\n";
  out << "vertices: " << mesh.num_vertices() << '\n';
  out << kNames[dim] << ": " << mesh.num_simplices() << '\n';
  out << "boundary facets: " << audit.boundary_facets << '\n';
  out << "interior facets: " << audit.interior_facets << '\n';
  std::snprintf(buf, sizeof buf, "%.6g", mesh.h_max());
  out << "h_max: " << buf << '\n';
  std::snprintf(buf, sizeof buf, "%.6g", quality);
  out << "min quality: " << buf << '\n';
  out << "dofs X: " << dx.count() << '\n';
  out << "dofs Y: " << dy.count() << '\n';
  std::snprintf(buf, sizeof buf, "%.17g", audit.volume_sum);
  out << "volume: " << buf << '\n';
  out << "audit: " << (audit.ok() ? "ok" : "FAILED " + audit.message) << '\n';
  return audit.ok() ? kOk : kNotConverged;
}

int cmd_run(const ExperimentConfig& config, std::ostream& out, std::ostream& err) {
  switch (config.study) {
    case StudyKind::Convergence: return cmd_study(config, out, err);
    case StudyKind::Noise: return cmd_noise(config, out, err);
    case StudyKind::Adaptive: return cmd_adapt(config, out, err);
    case StudyKind::Solve: return cmd_solve(config, out, err);
  }
  return kConfigError;
}

}  // namespace stfem::cli
