#pragma once

#include <array>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "stfem/mesh.hpp"

namespace stfem {

/// Barycentric coordinates (lambda_0, ..., lambda_d).
using Barycentric = std::array<double, kMaxDim + 1>;

/// Quadrature on the reference simplex; weights sum to 1/d!.
struct QuadRule {
  int dim = 0;
  int order = 0;  ///< polynomial exactness
  std::vector<Barycentric> points;
  std::vector<double> weights;
};

/// Tabulated rules: order 1..4 for d <= 3, order 1..3 for d = 4.
/// Throws std::invalid_argument for other pairs.
const QuadRule& rule(int dim, int order);

/// Conical Gauss-Jacobi product rule with n points per direction
/// (exact to degree 2n-1, n^d points, positive weights).
QuadRule gauss_jacobi_rule(int dim, int points_per_direction);

using ScalarField = std::function<double(const Point&)>;

/// Tells whether a field is smooth (polynomial or analytic) on the convex hull
/// of the given corners. Used to skip subdivision away from kinks and jumps.
using SmoothnessProbe = std::function<bool(std::span<const Point>)>;

/// Children of the reference simplex under one red (edge-midpoint) refinement:
/// 2^d simplices, each given by the barycentric coordinates of its d+1 corners.
const std::vector<std::array<Barycentric, kMaxDim + 1>>& red_children(int dim);

/// Callback receiving a physical point, its barycentric coordinates in the
/// parent element, and the physical weight.
using QuadraturePointSink =
    std::function<void(const Point&, const Barycentric&, double)>;

/// Visits the quadrature points of `base` on the depth-L red subdivision of the
/// simplex. With a probe, children on which the integrand is smooth are not
/// subdivided further.
void for_each_subdivided_point(std::span<const Point> corners, int dim, int depth,
                               const QuadRule& base, const QuadraturePointSink& sink,
                               const SmoothnessProbe* probe = nullptr);

/// Integral of f over the simplex using rule(d, base_order) on 2^{dL} red children.
double integrate_subdivided(const ScalarField& f, std::span<const Point> corners, int dim,
                            int depth, int base_order);

/// As above, but subdivides only children the probe reports as non-smooth.
double integrate_subdivided(const ScalarField& f, std::span<const Point> corners, int dim,
                            int depth, int base_order, const SmoothnessProbe& probe);

}  // namespace stfem
