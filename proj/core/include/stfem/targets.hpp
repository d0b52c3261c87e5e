#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>

#include "stfem/mesh.hpp"
#include "stfem/quadrature.hpp"

namespace stfem {

/// Sobolev class of a target; decides the expected convergence rate.
enum class SmoothnessClass { H2, H32, H12 };

enum class TargetKind { Smooth, Hat, CubeIndicator, NoisyIndicator, Custom };

double expected_rate(SmoothnessClass cls);
const char* to_string(SmoothnessClass cls);
const char* to_string(TargetKind kind);

/// Desired state on the unit cylinder with its regularity metadata.
struct TargetSpec {
  TargetKind kind = TargetKind::Custom;
  SmoothnessClass smoothness = SmoothnessClass::H2;
  int dim = 0;
  std::string name;
  ScalarField evaluate;
  /// True where the target is smooth on the hull of the given points. For
  /// smooth targets this is always true.
  SmoothnessProbe smooth_on;
  /// Closed-form L2(Q) norm when known.
  std::optional<double> l2_norm;
  double noise_delta = 0.0;

  [[nodiscard]] double expected_rate() const { return stfem::expected_rate(smoothness); }
  /// Whether assembly and error measurement need subdivided quadrature.
  [[nodiscard]] bool needs_subdivision() const { return smoothness != SmoothnessClass::H2; }
  double operator()(const Point& p) const { return evaluate(p); }
};

/// prod_i sin(pi y_i) over all space-time coordinates; n_space in {1,2,3}.
TargetSpec smooth_target(int n_space);

/// Max-norm cone 1 - 2 |y - c|_inf: one at the center, zero on the boundary.
TargetSpec hat_target(int dim);

/// Indicator of the closed cube [1/4, 3/4]^d.
TargetSpec cube_indicator(int dim);

/// cube_indicator(3) + 2 sqrt(2) delta sin(10 pi x1) sin(10 pi x2) sin(10 pi t).
TargetSpec noisy_indicator(double delta);

TargetSpec zero_target(int dim);

/// User supplied field; treated as smooth unless a probe is given.
TargetSpec custom_target(int dim, std::string name, ScalarField f,
                         SmoothnessClass cls = SmoothnessClass::H2,
                         SmoothnessProbe probe = {});

/// Lookup by configuration name: smooth, hat, cube, noisy, zero.
/// Throws std::invalid_argument for unknown names or unsupported dimensions.
TargetSpec make_target(const std::string& name, int dim, double noise_delta = 0.0);

}  // namespace stfem
