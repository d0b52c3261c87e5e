#include <gtest/gtest.h>

#include <random>

#include "stfem/locator.hpp"

namespace stfem {
namespace {

TEST(Locator, FindsContainingSimplex) {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int d = 2; d <= 4; ++d) {
    Mesh mesh = build_kuhn_mesh(d, 3);
    std::vector<int> marked{0, 5, 9};
    mesh = refine_bisection(mesh, marked);
    const PointLocator locator(mesh);
    for (int i = 0; i < 200; ++i) {
      Point x{};
      for (int a = 0; a < d; ++a) x[a] = u(rng);
      const auto loc = locator.locate(x);
      ASSERT_TRUE(loc.has_value());
      double sum = 0.0;
      for (int j = 0; j <= d; ++j) {
        EXPECT_GE(loc->lambda[j], -1e-12);
        sum += loc->lambda[j];
      }
      EXPECT_NEAR(sum, 1.0, 1e-12);
      const auto c = mesh.corners(loc->simplex);
      for (int a = 0; a < d; ++a) {
        double y = 0.0;
        for (int j = 0; j <= d; ++j) y += loc->lambda[j] * c[j][a];
        EXPECT_NEAR(y, x[a], 1e-12);
      }
    }
  }
}

TEST(Locator, InterpolationReproducesLinears) {
  const Mesh mesh = build_kuhn_mesh(3, 4);
  const PointLocator locator(mesh);
  std::vector<double> values(mesh.num_vertices());
  for (std::size_t v = 0; v < values.size(); ++v) {
    const Point& x = mesh.vertices()[v];
    values[v] = 0.5 + x[0] - 2.0 * x[1] + 3.0 * x[2];
  }
  for (const Point& x : {Point{0.1, 0.2, 0.3, 0}, Point{1, 1, 1, 0}, Point{0, 0.77, 0.5, 0}}) {
    EXPECT_NEAR(interpolate(mesh, locator, values, x), 0.5 + x[0] - 2.0 * x[1] + 3.0 * x[2], 1e-13);
  }
  EXPECT_FALSE(locator.locate(Point{1.5, 0.5, 0.5, 0}).has_value());
  EXPECT_THROW(interpolate(mesh, locator, values, Point{-0.1, 0.5, 0.5, 0}), std::out_of_range);
}

}  // namespace
}  // namespace stfem
