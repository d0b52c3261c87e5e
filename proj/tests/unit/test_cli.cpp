#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "stfem/dofmap.hpp"
#include "stfem_cli/commands.hpp"
#include "stfem_cli/config.hpp"

#ifndef STFEM_CONFIG_DIR
#error "STFEM_CONFIG_DIR must point at the bundled configs"
#endif

namespace stfem::cli {
namespace {

std::vector<ConfigIssue> issues_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.issues();
  }
  return {};
}

bool has_issue(const std::vector<ConfigIssue>& issues, int line, const std::string& fragment) {
  for (const auto& i : issues) {
    if (i.line == line && i.message.find(fragment) != std::string::npos) return true;
  }
  return false;
}

std::filesystem::path scratch(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("stfem_cli_test_" + name);
  std::filesystem::remove_all(dir);
  return dir;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

TEST(Config, MinimalFileTakesDefaults) {
  const ExperimentConfig c = parse_config("# comment\ndimension = 3\ntarget = smooth  # trailing\nlevels = 2, 4\n");
  EXPECT_EQ(c.dimension, 3);
  EXPECT_EQ(c.target, "smooth");
  EXPECT_EQ(c.levels, (std::vector<int>{2, 4}));
  EXPECT_EQ(c.study, StudyKind::Convergence);
  EXPECT_EQ(c.gmres_tol, 1e-8);
  EXPECT_EQ(c.gmres_restart, 100);
  EXPECT_EQ(c.theta, 0.5);
  EXPECT_EQ(c.formats, (std::vector<std::string>{"csv", "json"}));
}

TEST(Config, ReportsLineOfBadValue) {
  const auto issues = issues_of("dimension = 3\ntarget = smooth\nlevels = 4\ncoupling = fixed_rho\nrho = -1\n");
  EXPECT_TRUE(has_issue(issues, 5, "rho")) << (issues.empty() ? "" : issues[0].message);
}

TEST(Config, ReportsAllProblemsTogether) {
  const auto issues = issues_of("dimension = 7\nfrobnicate = 1\ntheta = 2\nlevels = 4\nlevels = 8\ncells = x\n");
  EXPECT_TRUE(has_issue(issues, 0, "target"));
  EXPECT_TRUE(has_issue(issues, 1, "dimension"));
  EXPECT_TRUE(has_issue(issues, 2, "frobnicate"));
  EXPECT_TRUE(has_issue(issues, 3, "theta"));
  EXPECT_TRUE(has_issue(issues, 5, "line 4"));
  EXPECT_TRUE(has_issue(issues, 6, "cells"));
}

TEST(Config, StudyConsistency) {
  EXPECT_FALSE(issues_of("study = noise\ndimension = 3\ntarget = cube\nnoise_levels = 0.125\n").empty());
  EXPECT_FALSE(issues_of("study = noise\ndimension = 3\ntarget = noisy\nnoise_levels = 0.1\n").empty());
  EXPECT_FALSE(issues_of("dimension = 2\ntarget = noisy\nlevels = 4\n").empty());
  EXPECT_FALSE(issues_of("dimension = 3\ntarget = smooth\n").empty());
  EXPECT_TRUE(issues_of("study = noise\ndimension = 3\ntarget = noisy\nnoise_levels = 2^-3, 2^-3.5\n").empty());
  EXPECT_TRUE(issues_of("study = adaptive\ndimension = 3\ntarget = cube\n").empty());
}

TEST(Config, NumberSyntax) {
  EXPECT_EQ(*parse_number("2^-3"), 0.125);
  EXPECT_NEAR(*parse_number("2^-3.5"), 0.08838834764831845, 1e-16);
  EXPECT_EQ(*parse_number("1e-8"), 1e-8);
  EXPECT_FALSE(parse_number("abc").has_value());
  EXPECT_FALSE(parse_number("2^").has_value());
  EXPECT_FALSE(parse_number("").has_value());
}

TEST(Config, SerializeRoundTrip) {
  std::mt19937 rng(5);
  auto pick = [&](int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng); };
  std::uniform_real_distribution<double> u(0.01, 0.99);
  for (int trial = 0; trial < 200; ++trial) {
    ExperimentConfig c;
    c.name = "run" + std::to_string(trial);
    c.study = static_cast<StudyKind>(pick(4));
    c.dimension = 2 + pick(3);
    c.target = std::vector<std::string>{"smooth", "hat", "cube", "zero"}[pick(4)];
    c.cells = 1 + pick(16);
    if (c.study == StudyKind::Convergence) {
      for (int m = 1; m <= 1 + pick(4); ++m) c.levels.push_back(1 << m);
      if (pick(2)) {
        c.coupling = Coupling::FixedRho;
        c.rho = u(rng);
      }
    }
    if (c.study == StudyKind::Noise) {
      c.dimension = 3;
      c.target = "noisy";
      c.coupling = Coupling::Noise;
      c.noise_levels = {0.125, std::pow(2.0, -3.5)};
    }
    if (c.study == StudyKind::Solve && pick(2)) c.rho = u(rng);
    c.method = static_cast<SolveMethod>(pick(3));
    c.gmres_tol = u(rng) * 1e-6;
    c.gmres_restart = 1 + pick(200);
    c.gmres_maxit = 1 + pick(5000);
    if (pick(2)) c.error_depth = pick(9);
    c.estimator_depth = pick(9);
    c.theta = u(rng);
    c.initial_cells = 1 + pick(8);
    c.max_dofs = 1 + pick(1000000);
    c.max_levels = 1 + pick(300);
    c.output_dir = "out/dir" + std::to_string(pick(10));
    c.formats = pick(2) ? std::vector<std::string>{"json", "vtk"} : std::vector<std::string>{"csv", "gnuplot"};
    c.threads = 1 + pick(8);
    c.slice_time = u(rng);
    const std::string text = serialize(c);
    ExperimentConfig back;
    ASSERT_NO_THROW(back = parse_config(text)) << text;
    EXPECT_EQ(back, c) << text;
    EXPECT_EQ(serialize(back), text);
  }
}

TEST(Config, BundledConfigsParse) {
  std::size_t n = 0;
  for (const auto& entry : std::filesystem::directory_iterator(STFEM_CONFIG_DIR)) {
    if (entry.path().extension() != ".cfg") continue;
    ++n;
    EXPECT_NO_THROW(load_config(entry.path().string())) << entry.path();
    const ExperimentConfig c = load_config(entry.path().string());
    EXPECT_EQ(c.name, entry.path().stem().string());
  }
  EXPECT_GE(n, 7u);
  EXPECT_THROW(load_config("/nonexistent/file.cfg"), ConfigError);
}

TEST(Commands, UniformDofsMatchDofMap) {
  for (int d = 2; d <= 4; ++d) {
    for (int m : {1, 2, 3, 5}) {
      const Mesh mesh = build_kuhn_mesh(d, m);
      EXPECT_EQ(uniform_dofs(d, m),
                build_dofmap(mesh, SpaceRole::X).count() + build_dofmap(mesh, SpaceRole::Y).count());
    }
  }
  EXPECT_EQ(uniform_dofs(3, 32), 62465u);
}

TEST(Commands, MeshInfo) {
  std::ostringstream out;
  EXPECT_EQ(cmd_mesh_info(4, 2, out), kOk);
  const std::string text = out.str();
  EXPECT_NE(text.find("vertices: 81\n"), std::string::npos);
  EXPECT_NE(text.find("pentatopes: 384\n"), std::string::npos);
  EXPECT_NE(text.find("audit: ok"), std::string::npos);
}

TEST(Commands, SolveWritesRequestedFiles) {
  const auto dir = scratch("solve");
  ExperimentConfig c = parse_config("study = solve\nname = tiny\ndimension = 3\ntarget = hat\ncells = 3\n");
  c.output_dir = dir.string();
  c.formats = {"csv", "json", "vtk"};
  std::ostringstream out;
  std::ostringstream err;
  EXPECT_EQ(cmd_run(c, out, err), kOk) << err.str();
  EXPECT_EQ(slurp(dir / "tiny.vtk").rfind("# vtk DataFile Version 3.0\n", 0), 0u);
  const std::string csv = slurp(dir / "tiny.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), kCsvHeader);
  EXPECT_NE(slurp(dir / "tiny.json").find("\"solver\""), std::string::npos);
  std::filesystem::remove_all(dir);
}

TEST(Commands, NonConvergenceExitCode) {
  const auto dir = scratch("maxit");
  ExperimentConfig c = parse_config("study = solve\nname = stuck\ndimension = 3\ntarget = smooth\ncells = 4\n"
                                    "gmres_maxit = 1\ngmres_restart = 1\n");
  c.output_dir = dir.string();
  std::ostringstream out;
  std::ostringstream err;
  EXPECT_EQ(cmd_run(c, out, err), kNotConverged);
  std::filesystem::remove_all(dir);
}

TEST(Commands, Overrides) {
  ExperimentConfig c = parse_config("dimension = 3\ntarget = smooth\nlevels = 4, 8, 16, 32\n");
  Overrides o;
  o.out_dir = "elsewhere";
  o.threads = 2;
  o.formats = {"csv", "csv", "vtk"};
  o.max_dofs = 1000;
  apply(c, o);
  EXPECT_EQ(c.output_dir, "elsewhere");
  EXPECT_EQ(c.threads, 2);
  EXPECT_EQ(c.formats, (std::vector<std::string>{"csv", "vtk"}));
  EXPECT_EQ(c.levels, (std::vector<int>{4, 8}));
  EXPECT_EQ(output_path(c, "gnuplot"), (std::filesystem::path("elsewhere") / "experiment.dat").string());
  Overrides none;
  none.max_dofs = 5;
  EXPECT_THROW(apply(c, none), ConfigError);
  Overrides bad;
  bad.formats = {"xml"};
  EXPECT_THROW(apply(c, bad), ConfigError);
}

}  // namespace
}  // namespace stfem::cli
