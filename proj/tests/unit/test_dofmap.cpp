#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "stfem/dofmap.hpp"
#include "stfem/mesh.hpp"

namespace stfem {
namespace {

TEST(DofMap, HandCountedKuhn22) {
  const Mesh mesh = build_kuhn_mesh(2, 2);
  EXPECT_EQ(build_dofmap(mesh, SpaceRole::Y).count(), 3u);
  EXPECT_EQ(build_dofmap(mesh, SpaceRole::X).count(), 2u);
  EXPECT_EQ(build_dofmap(mesh, SpaceRole::Free).count(), 9u);
}

TEST(DofMap, CountFormulas) {
  for (int d = 2; d <= 4; ++d) {
    for (int m = 1; m <= (d == 4 ? 4 : 6); ++m) {
      const Mesh mesh = build_kuhn_mesh(d, m);
      const auto interior = static_cast<std::size_t>(std::pow(m - 1, d - 1));
      const std::size_t nx = build_dofmap(mesh, SpaceRole::X).count();
      const std::size_t ny = build_dofmap(mesh, SpaceRole::Y).count();
      EXPECT_EQ(nx, interior * m);
      EXPECT_EQ(ny, interior * (m + 1));
      if (m >= 2) {
        EXPECT_LT(nx, ny);
        EXPECT_LT(ny, mesh.num_vertices());
      }
    }
  }
}

TEST(DofMap, ConstraintsFromCoordinates) {
  for (int d = 2; d <= 4; ++d) {
    const Mesh mesh = build_kuhn_mesh(d, 3);
    const DofMap x = build_dofmap(mesh, SpaceRole::X);
    const DofMap y = build_dofmap(mesh, SpaceRole::Y);
    for (std::size_t v = 0; v < mesh.num_vertices(); ++v) {
      const Point& p = mesh.vertices()[v];
      bool lateral = false;
      for (int i = 0; i + 1 < d; ++i) lateral = lateral || p[i] == 0.0 || p[i] == 1.0;
      const bool initial = p[d - 1] == 0.0;
      EXPECT_EQ(y.dof(v) < 0, lateral);
      EXPECT_EQ(x.dof(v) < 0, lateral || initial);
    }
  }
}

TEST(DofMap, NumberingIsConsistent) {
  const Mesh mesh = build_kuhn_mesh(3, 4);
  const DofMap x = build_dofmap(mesh, SpaceRole::X);
  for (std::size_t i = 0; i < x.count(); ++i) EXPECT_EQ(x.dof(static_cast<std::size_t>(x.vertex(i))), static_cast<int>(i));
  EXPECT_EQ(x.num_vertices(), mesh.num_vertices());
  EXPECT_EQ(x.role(), SpaceRole::X);
}

TEST(DofMap, RestrictProlongate) {
  const Mesh mesh = build_kuhn_mesh(3, 4);
  const DofMap y = build_dofmap(mesh, SpaceRole::Y);
  std::mt19937 rng(1);
  std::normal_distribution<double> n;
  std::vector<double> w(y.count());
  for (double& v : w) v = n(rng);
  EXPECT_EQ(y.restrict(y.prolongate(w)), w);

  std::vector<double> per_vertex(mesh.num_vertices());
  for (double& v : per_vertex) v = n(rng);
  const std::vector<double> back = y.prolongate(y.restrict(per_vertex));
  for (std::size_t v = 0; v < mesh.num_vertices(); ++v) {
    EXPECT_EQ(back[v], y.dof(v) >= 0 ? per_vertex[v] : 0.0);
  }
  const std::vector<double> zeros(y.count(), 0.0);
  for (double v : y.prolongate(zeros)) EXPECT_EQ(v, 0.0);
}

TEST(DofMap, SizeMismatchThrows) {
  const Mesh mesh = build_kuhn_mesh(2, 2);
  const DofMap y = build_dofmap(mesh, SpaceRole::Y);
  const std::vector<double> wrong(2, 0.0);
  EXPECT_ANY_THROW((void)y.prolongate(wrong));
  EXPECT_ANY_THROW((void)y.restrict(wrong));
}

}  // namespace
}  // namespace stfem
