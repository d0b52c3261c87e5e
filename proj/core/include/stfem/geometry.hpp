#pragma once

#include <array>
#include <span>

#include "stfem/mesh.hpp"

namespace stfem {

using SmallMatrix = std::array<std::array<double, kMaxDim>, kMaxDim>;

/// Affine map from the reference simplex onto one element.
struct ElementGeometry {
  int dim = 0;
  SmallMatrix jacobian{};           ///< column j is v[j+1] - v[0]
  SmallMatrix inverse_transpose{};  ///< J^{-T}
  double determinant = 0.0;
  double volume = 0.0;              ///< |det J| / d!
};

/// Throws MeshError if the simplex is degenerate (|det J| == 0).
ElementGeometry element_geometry(std::span<const Point> corners, int dim);

/// Gradients of the d+1 barycentric coordinates of an element.
using P1Gradients = std::array<std::array<double, kMaxDim>, kMaxDim + 1>;

struct P1Element {
  P1Gradients gradients{};
  double volume = 0.0;
};

/// Barycentric gradients and volume. Rejects simplices with
/// volume < 1e-14 * h^d where h is the longest edge.
P1Element p1_gradients(std::span<const Point> corners, int dim);

double factorial(int n);

/// Signed determinant of [v1-v0, ..., vd-v0].
double simplex_determinant(std::span<const Point> corners, int dim);

/// Longest edge.
double simplex_diameter(std::span<const Point> corners, int dim);

/// (d-1)-volume of the facet opposite local vertex `opposite`.
double facet_measure(std::span<const Point> corners, int dim, int opposite);

}  // namespace stfem
