#include <sys/resource.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "stfem/adaptivity.hpp"
#include "stfem/analysis.hpp"
#include "stfem/assembly.hpp"
#include "stfem/ocp.hpp"
#include "support/dense_oracle.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace stfem;

namespace {

// One solved mesh, as needed by the cross-run criteria.
struct RunRecord {
  std::string label;
  double state_L2 = 0.0;
  double target_L2 = 0.0;
  double error_L2 = 0.0;
  bool audit_ok = false;
  bool converged = false;
  double residual = 0.0;
};

void to_json(json& j, const RunRecord& r) {
  j = {{"label", r.label},         {"state_L2", r.state_L2},   {"target_L2", r.target_L2},
       {"error_L2", r.error_L2},   {"audit_ok", r.audit_ok},   {"converged", r.converged},
       {"residual", r.residual}};
}

void from_json(const json& j, RunRecord& r) {
  j.at("label").get_to(r.label);
  j.at("state_L2").get_to(r.state_L2);
  j.at("target_L2").get_to(r.target_L2);
  j.at("error_L2").get_to(r.error_L2);
  j.at("audit_ok").get_to(r.audit_ok);
  j.at("converged").get_to(r.converged);
  j.at("residual").get_to(r.residual);
}

struct Outcome {
  bool pass = false;
  std::string detail;
  std::vector<RunRecord> runs;
};

struct Context {
  fs::path cache_dir;
  fs::path self;
  int threads = 1;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

RunRecord record(const std::string& label, const StudyRow& r) {
  return {label, r.state_L2, r.target_L2, r.error_L2, r.mesh_audit_ok, r.converged, r.block_residual};
}

std::string label_of(const std::string& target, int d, int m) {
  return target + " Kuhn(" + std::to_string(d) + "," + std::to_string(m) + ")";
}

// Every level converged with true block residual <= 1e-6.
bool solves_ok(const std::vector<StudyRow>& rows, std::string& detail) {
  for (const StudyRow& r : rows) {
    if (!r.converged || !(r.block_residual <= 1e-6)) {
      detail += "; level m=" + std::to_string(r.m) + " residual " + fmt("%.2e", r.block_residual) +
                (r.converged ? "" : " not converged");
      return false;
    }
  }
  return true;
}

std::string eoc_list(const std::vector<StudyRow>& rows) {
  std::string out;
  for (const StudyRow& r : rows) {
    if (!r.eoc) continue;
    if (!out.empty()) out += ", ";
    out += fmt("%.3f", *r.eoc);
  }
  return out;
}

std::vector<StudyRow> uniform_study(const Context& ctx, int dim, const std::string& target, std::vector<int> levels) {
  StudyConfig c;
  c.dim = dim;
  c.target = target;
  c.levels = std::move(levels);
  c.threads = ctx.threads;
  return run_study(c, [&](const StudyRow& r) {
    std::fprintf(stderr, "  %s m=%d error %.4e eoc %s (%.1f s)\n", target.c_str(), r.m, r.error_L2,
                 r.eoc ? fmt("%.3f", *r.eoc).c_str() : "-", r.wall_time);
  });
}

Outcome rate_criterion(const Context& ctx, const std::string& target, double lo, double hi, double budget_s,
                       bool trailing_two) {
  const auto start = std::chrono::steady_clock::now();
  const auto rows = uniform_study(ctx, 3, target, {4, 8, 16, 32, 64});
  const double elapsed = seconds_since(start);
  Outcome o;
  for (const StudyRow& r : rows) o.runs.push_back(record(label_of(target, 3, r.m), r));
  bool pass = rows.size() == 5;
  const std::size_t first = trailing_two ? rows.size() - 2 : rows.size() - 1;
  for (std::size_t i = first; i < rows.size(); ++i) pass = pass && rows[i].eoc && *rows[i].eoc >= lo && *rows[i].eoc <= hi;
  o.detail = "eoc " + eoc_list(rows) + " (trailing in [" + fmt("%.2f", lo) + ", " + fmt("%.2f", hi) + "]), " +
             fmt("%.1f", elapsed) + " s of " + fmt("%.0f", budget_s) + " s";
  pass = solves_ok(rows, o.detail) && pass && elapsed < budget_s;
  o.pass = pass;
  return o;
}

Outcome criterion1(const Context& ctx) {
  Outcome o = rate_criterion(ctx, "smooth", 1.85, 2.15, 180.0, true);
  // Reference errors for h = 2^-2 ... 2^-6.
  const double reference[] = {2.2380e-1, 9.0449e-2, 2.6491e-2, 6.9335e-3, 1.7613e-3};
  bool decades = o.runs.size() == 5;
  for (std::size_t i = 0; decades && i < 5; ++i) {
    decades = std::floor(std::log10(o.runs[i].error_L2)) == std::floor(std::log10(reference[i]));
  }
  std::string errors;
  for (const RunRecord& r : o.runs) errors += (errors.empty() ? "" : ", ") + fmt("%.3e", r.error_L2);
  o.detail += "; errors " + errors + (decades ? " match" : " do not match") + " the reference decades";
  o.pass = o.pass && decades;
  return o;
}

Outcome criterion2(const Context& ctx) { return rate_criterion(ctx, "hat", 1.35, 1.60, 180.0, false); }
Outcome criterion3(const Context& ctx) { return rate_criterion(ctx, "cube", 0.45, 0.55, 300.0, false); }

Outcome criterion4(const Context& ctx) {
  const auto start = std::chrono::steady_clock::now();
  StudyConfig c;
  c.coupling = Coupling::Noise;
  c.noise_deltas = {std::pow(2.0, -3.0), std::pow(2.0, -3.5), std::pow(2.0, -4.0), std::pow(2.0, -4.5),
                    std::pow(2.0, -5.0)};
  c.threads = ctx.threads;
  const auto rows = run_study(c, [](const StudyRow& r) {
    std::fprintf(stderr, "  noisy delta=%.4g m=%d error %.4e (%.1f s)\n", r.noise_delta, r.m, r.error_L2, r.wall_time);
  });
  const double elapsed = seconds_since(start);
  Outcome o;
  bool pass = rows.size() == 5;
  for (const StudyRow& r : rows) {
    o.runs.push_back(record(label_of("noisy", 3, r.m), r));
    pass = pass && r.rho == r.h * r.h && std::abs(r.h - 16.0 * r.noise_delta * r.noise_delta) <= 1e-15;
    if (r.eoc) pass = pass && *r.eoc >= 0.40 && *r.eoc <= 0.55;
  }
  o.detail = "eoc " + eoc_list(rows) + " (all in [0.40, 0.55]), " + fmt("%.1f", elapsed) + " s of 180 s";
  o.pass = solves_ok(rows, o.detail) && pass && elapsed < 180.0;
  return o;
}

double peak_memory_gb() {
  rusage usage{};
  getrusage(RUSAGE_SELF, &usage);
  return static_cast<double>(usage.ru_maxrss) / (1024.0 * 1024.0);
}

Outcome criterion5(const Context& ctx) {
  const auto start = std::chrono::steady_clock::now();
  const auto rows = uniform_study(ctx, 4, "smooth", {2, 4, 8});
  const double elapsed = seconds_since(start);
  const double memory = peak_memory_gb();
  Outcome o;
  for (const StudyRow& r : rows) o.runs.push_back(record(label_of("smooth", 4, r.m), r));
  bool pass = rows.size() == 3;
  for (std::size_t i = 1; pass && i < rows.size(); ++i) pass = rows[i].error_L2 < rows[i - 1].error_L2;
  const bool monotone = pass;
  pass = pass && rows[2].eoc && *rows[2].eoc >= 1.6;
  std::string errors;
  for (const StudyRow& r : rows) errors += (errors.empty() ? "" : ", ") + fmt("%.4e", r.error_L2);
  o.detail = "errors " + errors + (monotone ? " decrease" : " not monotone") + "; eoc " + eoc_list(rows) +
             " (m=4->8 needs >= 1.6), " + fmt("%.1f", elapsed) + " s of 600 s, peak " + fmt("%.2f", memory) + " GB";
  o.pass = solves_ok(rows, o.detail) && pass && elapsed < 600.0 && memory < 8.0;
  return o;
}

Outcome criterion7(const Context&) {
  Outcome o;
  double worst_solve = 0.0;
  double worst_assembly = 0.0;
  int checked = 0;
  auto relative = [](const std::vector<double>& a, const std::vector<double>& b) {
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      num += (a[i] - b[i]) * (a[i] - b[i]);
      den += b[i] * b[i];
    }
    return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
  };
  bool solved = true;
  for (const auto& [d, max_m] : {std::pair{2, 8}, std::pair{3, 4}}) {
    for (int m = 2; m <= max_m; ++m) {
      const auto mesh = std::make_shared<const Mesh>(build_kuhn_mesh(d, m));
      const auto oracle = testing_support::dense_oracle(*mesh);
      const Assembler as(*mesh);
      for (SpaceRole role : {SpaceRole::Free, SpaceRole::X, SpaceRole::Y}) {
        const DofMap dm = build_dofmap(*mesh, role);
        auto diff = [&](const SparseMatrix& a, const Eigen::MatrixXd& b) {
          worst_assembly = std::max(worst_assembly, (a.to_dense() - b).cwiseAbs().maxCoeff());
        };
        diff(as.mass(dm, dm), testing_support::restrict_dense(oracle.mass, dm, dm));
        diff(as.stiffness_x(dm, dm), testing_support::restrict_dense(oracle.stiffness, dm, dm));
      }
      const DofMap x = build_dofmap(*mesh, SpaceRole::X);
      const DofMap y = build_dofmap(*mesh, SpaceRole::Y);
      worst_assembly = std::max(
          worst_assembly, (as.heat(y, x).to_dense() - testing_support::restrict_dense(oracle.heat, y, x)).cwiseAbs().maxCoeff());
      const MeshAudit audit = audit_mesh(*mesh);
      for (const std::string target : {"smooth", "hat", "cube"}) {
        const OcpProblem p = build_problem(mesh, 1.0 / (m * m), make_target(target, d));
        const OcpSolution gm = solve(p, SolveMethod::SaddleGmresIlu0);
        const OcpSolution lu = solve(p, SolveMethod::DenseLu);
        const OcpSolution sc = solve(p, SolveMethod::SchurCg);
        solved = solved && gm.report.converged && lu.report.converged && sc.report.converged;
        worst_solve = std::max({worst_solve, relative(gm.u, lu.u), relative(sc.u, lu.u)});
        RunRecord r;
        r.label = label_of(target, d, m);
        r.audit_ok = audit.ok();
        r.converged = gm.report.converged;
        o.runs.push_back(r);
        ++checked;
      }
    }
  }
  o.pass = solved && worst_solve <= 1e-6 && worst_assembly <= 1e-13;
  o.detail = std::to_string(checked) + " problems; max relative u difference " + fmt("%.2e", worst_solve) +
             " (<= 1e-6); max assembly deviation " + fmt("%.2e", worst_assembly) + " (<= 1e-13)";
  return o;
}

Outcome criterion8(const Context&) {
  const auto mesh = std::make_shared<const Mesh>(build_kuhn_mesh(3, 4));
  const OcpProblem p = build_problem(mesh, 1.0 / 16.0, smooth_target(2));
  std::mt19937 rng(8);
  std::normal_distribution<double> g;
  const std::size_t n = p.dof_x.count();
  double min_energy = INFINITY;
  double worst_asymmetry = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> u(n);
    std::vector<double> v(n);
    for (double& a : u) a = g(rng);
    for (double& a : v) a = g(rng);
    const auto su = apply_S_tilde(p, u);
    const auto sv = apply_S_tilde(p, v);
    min_energy = std::min(min_energy, dot(u, su));
    worst_asymmetry = std::max(worst_asymmetry, std::abs(dot(u, sv) - dot(v, su)));
  }
  Outcome o;
  o.pass = min_energy >= -1e-12 && worst_asymmetry <= 1e-10;
  o.detail = "100 pairs on Kuhn(3,4): min u'Su " + fmt("%.3e", min_energy) + " (>= -1e-12), max asymmetry " +
             fmt("%.2e", worst_asymmetry) + " (<= 1e-10)";
  RunRecord r;
  r.label = "S operator Kuhn(3,4)";
  r.audit_ok = audit_mesh(*mesh).ok();
  o.runs.push_back(r);
  return o;
}

Outcome criterion9(const Context& ctx) {
  const auto start = std::chrono::steady_clock::now();
  const auto uniform = uniform_study(ctx, 3, "cube", {32});
  Outcome o;
  o.runs.push_back(record(label_of("cube", 3, 32), uniform.front()));
  const double e_uniform = uniform.front().error_L2;
  const std::size_t n_uniform = uniform.front().dofs_total;

  AdaptConfig c;
  c.target = "cube";
  c.initial_cells = 4;
  c.theta = 0.5;
  c.max_dofs = n_uniform;
  c.threads = ctx.threads;
  const AdaptState st = adapt_loop(c, [](const AdaptLevel& l) {
    std::fprintf(stderr, "  adaptive level %d dofs %zu error %.4e marked %zu (%.1f s)\n", l.level, l.dofs_total,
                 l.error_L2, l.marked_count, l.wall_time);
  });
  const double elapsed = seconds_since(start);
  const AdaptLevel* hit = nullptr;
  bool audits = true;
  for (const AdaptLevel& l : st.levels) {
    audits = audits && l.mesh_audit_ok;
    RunRecord r;
    r.label = "adaptive cube level " + std::to_string(l.level);
    r.state_L2 = l.state_L2;
    r.error_L2 = l.error_L2;
    r.audit_ok = l.mesh_audit_ok;
    r.converged = l.converged;
    o.runs.push_back(r);
    if (!hit && l.error_L2 <= e_uniform) hit = &l;
  }
  o.detail = "uniform m=32: " + std::to_string(n_uniform) + " dofs, error " + fmt("%.4e", e_uniform);
  if (hit) {
    o.detail += "; adaptive level " + std::to_string(hit->level) + ": " + std::to_string(hit->dofs_total) +
                " dofs, error " + fmt("%.4e", hit->error_L2) + ", ratio " +
                fmt("%.3f", static_cast<double>(hit->dofs_total) / static_cast<double>(n_uniform)) + " (<= 0.75)";
  } else {
    o.detail += "; adaptive error never reached the uniform error (" + st.stop_reason + ")";
  }
  o.detail += ", " + fmt("%.1f", elapsed) + " s of 600 s";
  o.pass = hit && static_cast<double>(hit->dofs_total) <= 0.75 * static_cast<double>(n_uniform) && elapsed < 600.0;
  return o;
}

using CriterionFn = std::function<Outcome(const Context&)>;

const std::map<int, std::pair<std::string, CriterionFn>>& producers() {
  static const std::map<int, std::pair<std::string, CriterionFn>> table{
      {1, {"smooth target rate, d=3", criterion1}},
      {2, {"hat target rate, d=3", criterion2}},
      {3, {"discontinuous target rate, d=3", criterion3}},
      {4, {"noise study, h=16 delta^2", criterion4}},
      {5, {"smooth target, d=4 coarse levels", criterion5}},
      {7, {"solver and assembly oracle equivalence", criterion7}},
      {8, {"S operator positivity and symmetry", criterion8}},
      {9, {"adaptive efficiency, cube target", criterion9}},
  };
  return table;
}

fs::path cache_file(const Context& ctx, int n) { return ctx.cache_dir / ("criterion" + std::to_string(n) + ".json"); }

void store(const Context& ctx, int n, const std::vector<RunRecord>& runs) {
  fs::create_directories(ctx.cache_dir);
  std::ofstream(cache_file(ctx, n)) << json(runs).dump(1) << '\n';
}

// Runs of a producing criterion: reused from this build's cache when present.
std::vector<RunRecord> runs_of(const Context& ctx, int n) {
  const fs::path file = cache_file(ctx, n);
  std::error_code ec;
  if (fs::exists(file, ec) && fs::last_write_time(file, ec) >= fs::last_write_time(ctx.self, ec)) {
    return json::parse(std::ifstream(file)).get<std::vector<RunRecord>>();
  }
  std::fprintf(stderr, "  no cached runs for criterion %d, computing them\n", n);
  Outcome o = producers().at(n).second(ctx);
  store(ctx, n, o.runs);
  return o.runs;
}

Outcome criterion6(const Context& ctx) {
  Outcome o;
  int runs = 0;
  int violations = 0;
  std::string first;
  double worst_state = 0.0;
  double worst_error = 0.0;
  for (int n = 1; n <= 5; ++n) {
    for (const RunRecord& r : runs_of(ctx, n)) {
      ++runs;
      const bool ok = r.state_L2 <= r.target_L2 && r.error_L2 <= r.target_L2;
      worst_state = std::max(worst_state, r.state_L2 / r.target_L2);
      worst_error = std::max(worst_error, r.error_L2 / r.target_L2);
      if (!ok && violations++ == 0) first = r.label;
    }
  }
  o.pass = runs > 0 && violations == 0;
  o.detail = std::to_string(runs) + " runs, " + std::to_string(violations) + " violations; max ||u_h||/||u|| " +
             fmt("%.4f", worst_state) + ", max ||u_h-u||/||u|| " + fmt("%.4f", worst_error) +
             (first.empty() ? "" : "; first violation " + first);
  return o;
}

Outcome criterion10(const Context& ctx) {
  Outcome o;
  int meshes = 0;
  int failures = 0;
  std::string first;
  for (const auto& [n, producer] : producers()) {
    for (const RunRecord& r : runs_of(ctx, n)) {
      ++meshes;
      if (!r.audit_ok && failures++ == 0) first = r.label;
    }
  }
  o.pass = meshes > 0 && failures == 0;
  o.detail = std::to_string(meshes) + " meshes from criteria 1-5 and 7-9 audited, " + std::to_string(failures) +
             " failures" + (first.empty() ? "" : "; first failure " + first);
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria for the space-time optimal control solver"};
  std::vector<int> selected;
  Context ctx;
  std::string cache = "acceptance_cache";
  app.add_option("--criterion,-c", selected, "Criteria to run (default: all)")->check(CLI::Range(1, 10));
  app.add_option("--cache", cache, "Directory for run records shared between criteria");
  app.add_option("--threads", ctx.threads, "Assembly and solver threads")->check(CLI::PositiveNumber);
  CLI11_PARSE(app, argc, argv);
  ctx.cache_dir = cache;
  ctx.self = fs::canonical("/proc/self/exe");
  if (selected.empty()) selected = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};

  bool all = true;
  for (int n : selected) {
    std::string name;
    Outcome o;
    try {
      if (n == 6) {
        name = "discrete stability over criteria 1-5";
        o = criterion6(ctx);
      } else if (n == 10) {
        name = "mesh audits";
        o = criterion10(ctx);
      } else {
        const auto& [title, fn] = producers().at(n);
        name = title;
        o = fn(ctx);
        store(ctx, n, o.runs);
      }
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("error: ") + e.what();
    }
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << n << " (" << name << "): " << o.detail << std::endl;
    all = all && o.pass;
  }
  return all ? 0 : 1;
}
