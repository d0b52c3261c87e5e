#include "stfem/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

namespace stfem {

namespace {

// In-place LU with partial pivoting on the leading n x n block. Returns the
// determinant; zero signals a singular matrix.
double lu_decompose(SmallMatrix& a, std::array<int, kMaxDim>& perm, int n) {
  double det = 1.0;
  for (int i = 0; i < n; ++i) perm[i] = i;
  for (int k = 0; k < n; ++k) {
    int p = k;
    for (int i = k + 1; i < n; ++i) {
      if (std::abs(a[i][k]) > std::abs(a[p][k])) p = i;
    }
    if (a[p][k] == 0.0) return 0.0;
    if (p != k) {
      std::swap(a[p], a[k]);
      std::swap(perm[p], perm[k]);
      det = -det;
    }
    det *= a[k][k];
    for (int i = k + 1; i < n; ++i) {
      a[i][k] /= a[k][k];
      for (int j = k + 1; j < n; ++j) a[i][j] -= a[i][k] * a[k][j];
    }
  }
  return det;
}

SmallMatrix jacobian_of(std::span<const Point> corners, int dim) {
  SmallMatrix jac{};
  for (int j = 0; j < dim; ++j) {
    for (int i = 0; i < dim; ++i) jac[i][j] = corners[j + 1][i] - corners[0][i];
  }
  return jac;
}

}  // namespace

double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

double simplex_determinant(std::span<const Point> corners, int dim) {
  SmallMatrix lu = jacobian_of(corners, dim);
  std::array<int, kMaxDim> perm{};
  return lu_decompose(lu, perm, dim);
}

ElementGeometry element_geometry(std::span<const Point> corners, int dim) {
  ElementGeometry g;
  g.dim = dim;
  g.jacobian = jacobian_of(corners, dim);
  SmallMatrix lu = g.jacobian;
  std::array<int, kMaxDim> perm{};
  g.determinant = lu_decompose(lu, perm, dim);
  if (g.determinant == 0.0) throw MeshError("degenerate simplex");
  g.volume = std::abs(g.determinant) / factorial(dim);

  // Columns of J^{-1} from LU solves with unit vectors; store transposed.
  for (int c = 0; c < dim; ++c) {
    std::array<double, kMaxDim> x{};
    for (int i = 0; i < dim; ++i) x[i] = (perm[i] == c) ? 1.0 : 0.0;
    for (int i = 0; i < dim; ++i) {
      for (int j = 0; j < i; ++j) x[i] -= lu[i][j] * x[j];
    }
    for (int i = dim - 1; i >= 0; --i) {
      for (int j = i + 1; j < dim; ++j) x[i] -= lu[i][j] * x[j];
      x[i] /= lu[i][i];
    }
    // x is column c of J^{-1}, i.e. row c of J^{-T}.
    for (int i = 0; i < dim; ++i) g.inverse_transpose[c][i] = x[i];
  }
  return g;
}

P1Element p1_gradients(std::span<const Point> corners, int dim) {
  const double h = simplex_diameter(corners, dim);
  const ElementGeometry g = element_geometry(corners, dim);
  if (g.volume < 1e-14 * std::pow(h, dim)) throw MeshError("degenerate simplex");

  P1Element e;
  e.volume = g.volume;
  // grad(lambda_i) for i >= 1 is row i-1 of J^{-1}, i.e. column i-1 of J^{-T}.
  for (int i = 1; i <= dim; ++i) {
    for (int k = 0; k < dim; ++k) e.gradients[i][k] = g.inverse_transpose[k][i - 1];
  }
  for (int k = 0; k < dim; ++k) {
    double s = 0.0;
    for (int i = 1; i <= dim; ++i) s += e.gradients[i][k];
    e.gradients[0][k] = -s;
  }
  return e;
}

double simplex_diameter(std::span<const Point> corners, int dim) {
  double best = 0.0;
  for (int i = 0; i <= dim; ++i) {
    for (int j = i + 1; j <= dim; ++j) {
      double s = 0.0;
      for (int k = 0; k < dim; ++k) {
        const double d = corners[i][k] - corners[j][k];
        s += d * d;
      }
      best = std::max(best, s);
    }
  }
  return std::sqrt(best);
}

double facet_measure(std::span<const Point> corners, int dim, int opposite) {
  // Gram determinant of the d-1 edge vectors spanning the facet.
  std::array<Point, kMaxDim> edges{};
  int base = -1;
  int n = 0;
  for (int i = 0; i <= dim; ++i) {
    if (i == opposite) continue;
    if (base < 0) {
      base = i;
      continue;
    }
    for (int k = 0; k < dim; ++k) edges[n][k] = corners[i][k] - corners[base][k];
    ++n;
  }
  SmallMatrix gram{};
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      double s = 0.0;
      for (int k = 0; k < dim; ++k) s += edges[a][k] * edges[b][k];
      gram[a][b] = s;
    }
  }
  std::array<int, kMaxDim> perm{};
  const double det = (n == 0) ? 1.0 : lu_decompose(gram, perm, n);
  return std::sqrt(std::max(det, 0.0)) / factorial(n);
}

}  // namespace stfem
