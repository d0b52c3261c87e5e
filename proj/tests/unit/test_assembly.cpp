#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "stfem/assembly.hpp"
#include "stfem/dofmap.hpp"
#include "stfem/mesh.hpp"
#include "stfem/quadrature.hpp"
#include "support/dense_oracle.hpp"

namespace stfem {
namespace {

using testing_support::dense_oracle;
using testing_support::DenseForms;
using testing_support::restrict_dense;

double max_diff(const SparseMatrix& a, const Eigen::MatrixXd& b) { return (a.to_dense() - b).cwiseAbs().maxCoeff(); }

class OracleEquivalence : public ::testing::TestWithParam<std::pair<int, int>> {};

TEST_P(OracleEquivalence, EveryEntryMatches) {
  const auto [d, m] = GetParam();
  const Mesh mesh = build_kuhn_mesh(d, m);
  const DenseForms oracle = dense_oracle(mesh);
  const Assembler as(mesh);
  for (SpaceRole role : {SpaceRole::Free, SpaceRole::X, SpaceRole::Y}) {
    const DofMap dm = build_dofmap(mesh, role);
    if (dm.count() == 0) continue;
    EXPECT_LE(max_diff(as.mass(dm, dm), restrict_dense(oracle.mass, dm, dm)), 1e-13);
    EXPECT_LE(max_diff(as.stiffness_x(dm, dm), restrict_dense(oracle.stiffness, dm, dm)), 1e-13);
  }
  const DofMap x = build_dofmap(mesh, SpaceRole::X);
  const DofMap y = build_dofmap(mesh, SpaceRole::Y);
  if (x.count() > 0) EXPECT_LE(max_diff(as.heat(y, x), restrict_dense(oracle.heat, y, x)), 1e-13);
  const DofMap free = build_dofmap(mesh, SpaceRole::Free);
  EXPECT_LE(max_diff(as.heat(free, free), oracle.heat), 1e-13);
}

INSTANTIATE_TEST_SUITE_P(Meshes, OracleEquivalence,
                         ::testing::Values(std::pair{2, 1}, std::pair{3, 1}, std::pair{2, 4}, std::pair{3, 3},
                                           std::pair{4, 2}));

TEST(Assembly, FreeKernels) {
  for (int d = 2; d <= 4; ++d) {
    const Mesh mesh = build_kuhn_mesh(d, d == 4 ? 2 : 3);
    const DofMap free = build_dofmap(mesh, SpaceRole::Free);
    const Assembler as(mesh);
    const std::vector<double> ones(free.count(), 1.0);
    for (double v : spmv(as.stiffness_x(free, free), ones)) EXPECT_NEAR(v, 0.0, 1e-12);
    for (double v : spmv(as.heat(free, free), ones)) EXPECT_NEAR(v, 0.0, 1e-12);
    EXPECT_NEAR(dot(ones, spmv(as.mass(free, free), ones)), 1.0, 1e-12);
  }
}

TEST(Assembly, ReferenceTriangleMass) {
  std::vector<Point> v{{0, 0}, {1, 0}, {0, 1}, {1, 1}};
  std::vector<Simplex> s(2);
  s[0].v = {0, 1, 2, -1, -1};
  s[1].v = {1, 3, 2, -1, -1};
  const Mesh mesh(2, v, s);
  const DofMap free = build_dofmap(mesh, SpaceRole::Free);
  const SparseMatrix m = Assembler(mesh).mass(free, free);
  EXPECT_NEAR(m.at(0, 0), 1.0 / 12.0, 1e-15);
  EXPECT_NEAR(m.at(0, 1), 1.0 / 24.0, 1e-15);
  EXPECT_NEAR(m.at(0, 2), 1.0 / 24.0, 1e-15);
  EXPECT_EQ(m.at(0, 3), 0.0);
}

TEST(Assembly, HeatSplitsIntoStiffnessAndTimeDerivative) {
  const Mesh mesh = build_kuhn_mesh(3, 3);
  const DofMap free = build_dofmap(mesh, SpaceRole::Free);
  const Assembler as(mesh);
  const Eigen::MatrixXd n = as.heat(free, free).to_dense() - as.stiffness_x(free, free).to_dense();
  EXPECT_LT((n * Eigen::VectorXd::Ones(n.cols())).cwiseAbs().maxCoeff(), 1e-13);
  // The time-derivative part is skew apart from boundary terms: N + N^T integrates d_t(phi_i phi_j).
  const Eigen::MatrixXd sym = n + n.transpose();
  EXPECT_NEAR(sym.sum(), 0.0, 1e-12);
}

TEST(Assembly, HeatFormIsMonotoneOnX) {
  std::mt19937 rng(7);
  std::normal_distribution<double> g;
  for (int d : {2, 3}) {
    const Mesh mesh = build_kuhn_mesh(d, 2 + d);
    const DofMap x = build_dofmap(mesh, SpaceRole::X);
    const SparseMatrix b = Assembler(mesh).heat(x, x);
    for (int trial = 0; trial < 100; ++trial) {
      std::vector<double> u(x.count());
      for (double& v : u) v = g(rng);
      EXPECT_GE(dot(u, spmv(b, u)), -1e-13);
    }
  }
}

TEST(Assembly, DefinitenessAfterRestriction) {
  {
    const Mesh mesh = build_kuhn_mesh(2, 2);
    const DofMap y = build_dofmap(mesh, SpaceRole::Y);
    const Eigen::MatrixXd a = Assembler(mesh).stiffness_x(y, y).to_dense();
    EXPECT_LT((a - a.transpose()).cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_GT(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(a).eigenvalues().minCoeff(), 0.0);
  }
  {
    const Mesh mesh = build_kuhn_mesh(3, 2);
    const DofMap x = build_dofmap(mesh, SpaceRole::X);
    const Eigen::MatrixXd m = Assembler(mesh).mass(x, x).to_dense();
    EXPECT_EQ(Eigen::LLT<Eigen::MatrixXd>(m).info(), Eigen::Success);
  }
  {
    const Mesh mesh = build_kuhn_mesh(3, 3);
    const DofMap free = build_dofmap(mesh, SpaceRole::Free);
    const Eigen::MatrixXd a = Assembler(mesh).stiffness_x(free, free).to_dense();
    EXPECT_GT(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(a).eigenvalues().minCoeff(), -1e-12);
  }
}

TEST(Assembly, RestrictionConsistency) {
  const Mesh mesh = build_kuhn_mesh(3, 3);
  const DofMap free = build_dofmap(mesh, SpaceRole::Free);
  const DofMap x = build_dofmap(mesh, SpaceRole::X);
  const DofMap y = build_dofmap(mesh, SpaceRole::Y);
  const Assembler as(mesh);
  const Eigen::MatrixXd heat_free = as.heat(free, free).to_dense();
  const SparseMatrix heat = as.heat(y, x);
  EXPECT_LE(max_diff(heat, restrict_dense(heat_free, y, x)), 1e-14);
  // Same sparsity: a restricted entry is stored exactly when the free one is.
  const SparseMatrix hf = as.heat(free, free);
  for (std::size_t i = 0; i < y.count(); ++i) {
    for (std::size_t j = 0; j < x.count(); ++j) {
      const auto& cols = heat.col_indices();
      const auto begin = cols.begin() + heat.row_offsets()[i];
      const auto end = cols.begin() + heat.row_offsets()[i + 1];
      const bool stored = std::binary_search(begin, end, static_cast<int>(j));
      const auto& fcols = hf.col_indices();
      const int fi = y.vertex(i);
      const bool fstored = std::binary_search(fcols.begin() + hf.row_offsets()[fi],
                                              fcols.begin() + hf.row_offsets()[fi + 1], x.vertex(j));
      EXPECT_EQ(stored, fstored);
    }
  }
}

TEST(Assembly, ThreadCountDoesNotChangeBits) {
  const Mesh mesh = build_kuhn_mesh(3, 6);
  const DofMap x = build_dofmap(mesh, SpaceRole::X);
  const DofMap y = build_dofmap(mesh, SpaceRole::Y);
  const TargetSpec t = cube_indicator(3);
  const AssembledOperators one = assemble_operators(mesh, x, y, t, 1);
  const AssembledOperators three = assemble_operators(mesh, x, y, t, 3);
  EXPECT_EQ(one.A.values(), three.A.values());
  EXPECT_EQ(one.B.values(), three.B.values());
  EXPECT_EQ(one.M.values(), three.M.values());
  EXPECT_EQ(one.B.col_indices(), three.B.col_indices());
  EXPECT_EQ(one.f, three.f);
}

TEST(Load, ZeroAndConstantTargets) {
  const Mesh mesh = build_kuhn_mesh(3, 4);
  const DofMap free = build_dofmap(mesh, SpaceRole::Free);
  for (double v : assemble_load(mesh, free, zero_target(3))) EXPECT_EQ(v, 0.0);
  const TargetSpec one = custom_target(3, "one", [](const Point&) { return 1.0; });
  double sum = 0.0;
  for (double v : assemble_load(mesh, free, one)) sum += v;
  EXPECT_NEAR(sum, 1.0, 1e-13);
}

TEST(Load, CubeIndicatorMeasure) {
  for (int d = 2; d <= 4; ++d) {
    // Odd cell counts keep the cube faces inside elements.
    const Mesh mesh = build_kuhn_mesh(d, 3);
    const DofMap free = build_dofmap(mesh, SpaceRole::Free);
    double sum = 0.0;
    for (double v : assemble_load(mesh, free, cube_indicator(d))) sum += v;
    EXPECT_NEAR(sum, std::pow(2.0, -d), 2e-3) << "d=" << d;
  }
}

TEST(Load, SmoothTargetMatchesElementQuadrature) {
  const Mesh mesh = build_kuhn_mesh(3, 3);
  const DofMap x = build_dofmap(mesh, SpaceRole::X);
  const TargetSpec t = smooth_target(2);
  const std::vector<double> f = assemble_load(mesh, x, t);
  std::vector<double> oracle(mesh.num_vertices(), 0.0);
  const QuadRule& q = rule(3, 3);
  for (std::size_t k = 0; k < mesh.num_simplices(); ++k) {
    const auto c = mesh.corners(k);
    const double vol = mesh.volume(k) * 6.0;
    for (std::size_t p = 0; p < q.points.size(); ++p) {
      Point y{};
      for (int i = 0; i <= 3; ++i) {
        for (int a = 0; a < 3; ++a) y[a] += q.points[p][i] * c[i][a];
      }
      const double w = q.weights[p] * vol * t(y);
      for (int i = 0; i <= 3; ++i) oracle[mesh.simplices()[k].v[i]] += w * q.points[p][i];
    }
  }
  for (std::size_t i = 0; i < x.count(); ++i) EXPECT_NEAR(f[i], oracle[x.vertex(i)], 1e-14);
}

TEST(Load, QuadratureDefaults) {
  EXPECT_EQ(load_quadrature(smooth_target(2)).depth, 0);
  EXPECT_EQ(load_quadrature(cube_indicator(3)).depth, 4);
  EXPECT_EQ(load_quadrature(cube_indicator(3)).subdivision_order, 2);
  EXPECT_EQ(load_quadrature(noisy_indicator(0.125)).subdivision_order, 4);
}

TEST(Assembly, ForeignDofMapRejected) {
  const Mesh a = build_kuhn_mesh(2, 2);
  const Mesh b = build_kuhn_mesh(2, 3);
  const DofMap yb = build_dofmap(b, SpaceRole::Y);
  EXPECT_THROW((void)Assembler(a).mass(yb, yb), std::invalid_argument);
}

}  // namespace
}  // namespace stfem
