#pragma once

#include <optional>
#include <span>
#include <vector>

#include "stfem/mesh.hpp"
#include "stfem/quadrature.hpp"

namespace stfem {

/// Element containing a point, with the point's barycentric coordinates.
struct Location {
  std::size_t simplex = 0;
  Barycentric lambda{};
};

/// Bucket grid over the unit hypercube. Each bucket lists the simplices whose
/// bounding box overlaps it.
class PointLocator {
 public:
  explicit PointLocator(const Mesh& mesh);

  /// Empty when the point lies outside the closed unit hypercube.
  [[nodiscard]] std::optional<Location> locate(const Point& x) const;

 private:
  [[nodiscard]] std::size_t bucket_of(const Point& x) const;

  const Mesh& mesh_;
  int per_axis_ = 1;
  std::vector<std::int64_t> offsets_;
  std::vector<int> entries_;
};

/// Barycentric coordinates of x in simplex k.
Barycentric barycentric(const Mesh& mesh, std::size_t k, const Point& x);

/// P1 interpolation of per-vertex values. Throws std::out_of_range outside
/// the cylinder.
double interpolate(const Mesh& mesh, const PointLocator& locator,
                   std::span<const double> vertex_values, const Point& x);

}  // namespace stfem
