#include "stfem/targets.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace stfem {

namespace {

using std::numbers::pi;

void check_dim(int dim) {
  if (dim < 2 || dim > kMaxDim) throw std::invalid_argument("target dimension must be 2, 3 or 4");
}

bool always_smooth(std::span<const Point>) { return true; }

// Cube [1/4, 3/4]^d is constant on a simplex if all corners lie in the closed
// cube, or all corners lie on the far side of one of its faces.
SmoothnessProbe cube_probe(int dim) {
  return [dim](std::span<const Point> pts) {
    bool inside = true;
    for (const Point& p : pts) {
      for (int i = 0; i < dim; ++i) inside = inside && p[i] >= 0.25 && p[i] <= 0.75;
    }
    if (inside) return true;
    for (int i = 0; i < dim; ++i) {
      bool below = true;
      bool above = true;
      for (const Point& p : pts) {
        below = below && p[i] <= 0.25;
        above = above && p[i] >= 0.75;
      }
      if (below || above) return true;
    }
    return false;
  };
}

// The cone is affine on each pyramid {s (y_i - 1/2) >= |y_j - 1/2| for all j}.
// Those pyramids are convex, so a simplex is inside one iff all corners are.
SmoothnessProbe hat_probe(int dim) {
  return [dim](std::span<const Point> pts) {
    unsigned common = (1u << (2 * dim)) - 1u;
    for (const Point& p : pts) {
      double r = 0.0;
      for (int i = 0; i < dim; ++i) r = std::max(r, std::abs(p[i] - 0.5));
      unsigned mask = 0;
      for (int i = 0; i < dim; ++i) {
        const double d = p[i] - 0.5;
        if (d == r) mask |= 1u << (2 * i);
        if (-d == r) mask |= 1u << (2 * i + 1);
      }
      common &= mask;
      if (common == 0) return false;
    }
    return true;
  };
}

double cube_value(const Point& p, int dim) {
  for (int i = 0; i < dim; ++i) {
    if (p[i] < 0.25 || p[i] > 0.75) return 0.0;
  }
  return 1.0;
}

}  // namespace

double expected_rate(SmoothnessClass cls) {
  switch (cls) {
    case SmoothnessClass::H2:
      return 2.0;
    case SmoothnessClass::H32:
      return 1.5;
    case SmoothnessClass::H12:
      return 0.5;
  }
  return 0.0;
}

const char* to_string(SmoothnessClass cls) {
  switch (cls) {
    case SmoothnessClass::H2:
      return "H2";
    case SmoothnessClass::H32:
      return "H3/2";
    case SmoothnessClass::H12:
      return "H1/2";
  }
  return "?";
}

const char* to_string(TargetKind kind) {
  switch (kind) {
    case TargetKind::Smooth:
      return "smooth";
    case TargetKind::Hat:
      return "hat";
    case TargetKind::CubeIndicator:
      return "cube";
    case TargetKind::NoisyIndicator:
      return "noisy";
    case TargetKind::Custom:
      return "custom";
  }
  return "?";
}

TargetSpec smooth_target(int n_space) {
  if (n_space < 1 || n_space > 3) throw std::invalid_argument("smooth target needs 1..3 space dims");
  const int dim = n_space + 1;
  TargetSpec t;
  t.kind = TargetKind::Smooth;
  t.smoothness = SmoothnessClass::H2;
  t.dim = dim;
  t.name = "smooth";
  t.evaluate = [dim](const Point& p) {
    double v = 1.0;
    for (int i = 0; i < dim; ++i) v *= std::sin(pi * p[i]);
    return v;
  };
  t.smooth_on = always_smooth;
  t.l2_norm = std::pow(0.5, 0.5 * dim);
  return t;
}

TargetSpec hat_target(int dim) {
  check_dim(dim);
  TargetSpec t;
  t.kind = TargetKind::Hat;
  t.smoothness = SmoothnessClass::H32;
  t.dim = dim;
  t.name = "hat";
  t.evaluate = [dim](const Point& p) {
    double r = 0.0;
    for (int i = 0; i < dim; ++i) r = std::max(r, std::abs(p[i] - 0.5));
    return std::max(0.0, 1.0 - 2.0 * r);
  };
  t.smooth_on = hat_probe(dim);
  // int_0^1 (1-s)^2 d s^{d-1} ds = 2 / ((d+1)(d+2))
  t.l2_norm = std::sqrt(2.0 / ((dim + 1.0) * (dim + 2.0)));
  return t;
}

TargetSpec cube_indicator(int dim) {
  check_dim(dim);
  TargetSpec t;
  t.kind = TargetKind::CubeIndicator;
  t.smoothness = SmoothnessClass::H12;
  t.dim = dim;
  t.name = "cube";
  t.evaluate = [dim](const Point& p) { return cube_value(p, dim); };
  t.smooth_on = cube_probe(dim);
  t.l2_norm = std::pow(0.5, 0.5 * dim);
  return t;
}

TargetSpec noisy_indicator(double delta) {
  if (!(delta >= 0.0)) throw std::invalid_argument("noise level must be nonnegative");
  TargetSpec t = cube_indicator(3);
  t.kind = TargetKind::NoisyIndicator;
  t.name = "noisy";
  t.noise_delta = delta;
  const double amplitude = 2.0 * std::sqrt(2.0) * delta;
  t.evaluate = [amplitude](const Point& p) {
    return cube_value(p, 3) +
           amplitude * std::sin(10.0 * pi * p[0]) * std::sin(10.0 * pi * p[1]) *
               std::sin(10.0 * pi * p[2]);
  };
  // The noise is orthogonal to the indicator: int_{1/4}^{3/4} sin(10 pi x) dx = 0.
  t.l2_norm = std::sqrt(0.125 + delta * delta);
  return t;
}

TargetSpec zero_target(int dim) {
  check_dim(dim);
  TargetSpec t;
  t.kind = TargetKind::Custom;
  t.dim = dim;
  t.name = "zero";
  t.evaluate = [](const Point&) { return 0.0; };
  t.smooth_on = always_smooth;
  t.l2_norm = 0.0;
  return t;
}

TargetSpec custom_target(int dim, std::string name, ScalarField f, SmoothnessClass cls,
                         SmoothnessProbe probe) {
  check_dim(dim);
  TargetSpec t;
  t.kind = TargetKind::Custom;
  t.smoothness = cls;
  t.dim = dim;
  t.name = std::move(name);
  t.evaluate = std::move(f);
  t.smooth_on = probe ? std::move(probe) : SmoothnessProbe(always_smooth);
  return t;
}

TargetSpec make_target(const std::string& name, int dim, double noise_delta) {
  if (name == "smooth") return smooth_target(dim - 1);
  if (name == "hat") return hat_target(dim);
  if (name == "cube") return cube_indicator(dim);
  if (name == "zero") return zero_target(dim);
  if (name == "noisy") {
    if (dim != 3) throw std::invalid_argument("noisy target is defined for d = 3 only");
    return noisy_indicator(noise_delta);
  }
  throw std::invalid_argument("unknown target '" + name + "'");
}

}  // namespace stfem
