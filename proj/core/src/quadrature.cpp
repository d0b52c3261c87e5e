#include "stfem/quadrature.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numeric>

#include "stfem/geometry.hpp"

namespace stfem {

namespace {

// Gauss-Jacobi nodes and weights on [0,1] for the weight (1-x)^alpha,
// via Golub-Welsch on the Jacobi(alpha, 0) recurrence.
void gauss_jacobi_01(int n, double alpha, std::vector<double>& nodes,
                     std::vector<double>& weights) {
  const double beta = 0.0;
  Eigen::MatrixXd jm = Eigen::MatrixXd::Zero(n, n);
  for (int k = 0; k < n; ++k) {
    const double s = 2.0 * k + alpha + beta;
    jm(k, k) = (k == 0) ? (beta - alpha) / (alpha + beta + 2.0)
                        : (beta * beta - alpha * alpha) / (s * (s + 2.0));
    if (k + 1 < n) {
      const double j = k + 1.0;
      const double t = 2.0 * j + alpha + beta;
      const double b = std::sqrt(4.0 * j * (j + alpha) * (j + beta) * (j + alpha + beta) /
                                 (t * t * (t + 1.0) * (t - 1.0)));
      jm(k, k + 1) = jm(k + 1, k) = b;
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jm);
  const double mu0 = std::pow(2.0, alpha + 1.0) / (alpha + 1.0);
  nodes.resize(n);
  weights.resize(n);
  for (int k = 0; k < n; ++k) {
    const double x = eig.eigenvalues()(k);
    const double v = eig.eigenvectors()(0, k);
    nodes[k] = 0.5 * (1.0 + x);
    weights[k] = mu0 * v * v / std::pow(2.0, alpha + 1.0);
  }
}

QuadRule centroid_rule(int dim) {
  QuadRule r;
  r.dim = dim;
  r.order = 1;
  Barycentric b{};
  for (int i = 0; i <= dim; ++i) b[i] = 1.0 / (dim + 1);
  r.points.push_back(b);
  r.weights.push_back(1.0 / factorial(dim));
  return r;
}

// d+1 symmetric points, degree 2.
QuadRule symmetric_order2_rule(int dim) {
  QuadRule r;
  r.dim = dim;
  r.order = 2;
  const double n = dim + 1.0;
  const double beta = (dim + 2.0 - std::sqrt(dim + 2.0)) / (n * (dim + 2.0));
  const double alpha = 1.0 - dim * beta;
  for (int i = 0; i <= dim; ++i) {
    Barycentric b{};
    for (int j = 0; j <= dim; ++j) b[j] = (i == j) ? alpha : beta;
    r.points.push_back(b);
    r.weights.push_back(1.0 / (n * factorial(dim)));
  }
  return r;
}

}  // namespace

QuadRule gauss_jacobi_rule(int dim, int n) {
  if (dim < 1 || dim > kMaxDim || n < 1) throw std::invalid_argument("bad Gauss-Jacobi rule");
  std::vector<std::vector<double>> nodes(dim);
  std::vector<std::vector<double>> weights(dim);
  for (int k = 0; k < dim; ++k) {
    gauss_jacobi_01(n, static_cast<double>(dim - 1 - k), nodes[k], weights[k]);
  }
  QuadRule r;
  r.dim = dim;
  r.order = 2 * n - 1;
  std::array<int, kMaxDim> idx{};
  std::size_t total = 1;
  for (int k = 0; k < dim; ++k) total *= static_cast<std::size_t>(n);
  for (std::size_t flat = 0; flat < total; ++flat) {
    std::size_t rem = flat;
    for (int k = 0; k < dim; ++k) {
      idx[k] = static_cast<int>(rem % n);
      rem /= n;
    }
    // Collapsed coordinates: y_k = xi_k * prod_{j<k} (1 - xi_j).
    Barycentric b{};
    double scale = 1.0;
    double w = 1.0;
    double sum = 0.0;
    for (int k = 0; k < dim; ++k) {
      const double xi = nodes[k][idx[k]];
      b[k + 1] = xi * scale;
      sum += b[k + 1];
      scale *= (1.0 - xi);
      w *= weights[k][idx[k]];
    }
    b[0] = std::max(0.0, 1.0 - sum);
    r.points.push_back(b);
    r.weights.push_back(w);
  }
  return r;
}

const QuadRule& rule(int dim, int order) {
  const int max_order = (dim == 4) ? 3 : 4;
  if (dim < 2 || dim > kMaxDim || order < 1 || order > max_order) {
    throw std::invalid_argument("unsupported quadrature rule (d=" + std::to_string(dim) +
                                ", order=" + std::to_string(order) + ")");
  }
  static std::mutex mutex;
  static std::map<std::pair<int, int>, QuadRule> cache;
  std::lock_guard lock(mutex);
  auto it = cache.find({dim, order});
  if (it != cache.end()) return it->second;
  QuadRule r;
  if (order == 1) {
    r = centroid_rule(dim);
  } else if (order == 2) {
    r = symmetric_order2_rule(dim);
  } else {
    r = gauss_jacobi_rule(dim, (order + 2) / 2);
    r.order = order;
  }
  return cache.emplace(std::make_pair(dim, order), std::move(r)).first->second;
}

const std::vector<std::array<Barycentric, kMaxDim + 1>>& red_children(int dim) {
  static std::mutex mutex;
  static std::map<int, std::vector<std::array<Barycentric, kMaxDim + 1>>> cache;
  std::lock_guard lock(mutex);
  auto it = cache.find(dim);
  if (it != cache.end()) return it->second;

  // The reference simplex is taken as S = {1 >= y_1 >= ... >= y_d >= 0}.
  // 2S is the union of the Kuhn simplices of the unit grid on [0,2]^d that it
  // contains; scaling those by 1/2 gives 2^d congruent children.
  auto to_barycentric = [dim](const std::array<double, kMaxDim>& y) {
    Barycentric b{};
    b[0] = 1.0 - y[0];
    for (int k = 1; k < dim; ++k) b[k] = y[k - 1] - y[k];
    b[dim] = y[dim - 1];
    return b;
  };
  std::vector<std::array<Barycentric, kMaxDim + 1>> children;
  std::array<int, kMaxDim> perm{};
  for (int mask = 0; mask < (1 << dim); ++mask) {
    std::iota(perm.begin(), perm.begin() + dim, 0);
    do {
      std::array<std::array<double, kMaxDim>, kMaxDim + 1> corners{};
      for (int i = 0; i < dim; ++i) corners[0][i] = (mask >> i) & 1;
      for (int j = 0; j < dim; ++j) {
        corners[j + 1] = corners[j];
        corners[j + 1][perm[j]] += 1.0;
      }
      std::array<double, kMaxDim> centroid{};
      for (int j = 0; j <= dim; ++j) {
        for (int i = 0; i < dim; ++i) centroid[i] += corners[j][i] / (dim + 1);
      }
      bool inside = centroid[0] < 2.0 && centroid[dim - 1] > 0.0;
      for (int i = 0; i + 1 < dim; ++i) inside = inside && centroid[i] > centroid[i + 1];
      if (!inside) continue;
      std::array<Barycentric, kMaxDim + 1> child{};
      for (int j = 0; j <= dim; ++j) {
        std::array<double, kMaxDim> y{};
        for (int i = 0; i < dim; ++i) y[i] = 0.5 * corners[j][i];
        child[j] = to_barycentric(y);
      }
      children.push_back(child);
    } while (std::next_permutation(perm.begin(), perm.begin() + dim));
  }
  return cache.emplace(dim, std::move(children)).first->second;
}

namespace {

struct SubdivisionWalker {
  int dim;
  const QuadRule& base;
  const QuadraturePointSink& sink;
  const SmoothnessProbe* probe;
  std::span<const Point> parent;
  double parent_volume;
  const std::vector<std::array<Barycentric, kMaxDim + 1>>& children;

  // `frame` holds the parent-barycentric coordinates of the current child's
  // corners; `volume` is its physical volume.
  void visit(const std::array<Barycentric, kMaxDim + 1>& frame, int depth, double volume) {
    bool smooth = false;
    if (probe != nullptr && depth > 0) {
      std::array<Point, kMaxDim + 1> pts{};
      for (int j = 0; j <= dim; ++j) pts[j] = to_physical(frame[j]);
      smooth = (*probe)(std::span<const Point>(pts.data(), dim + 1));
    }
    if (depth == 0 || smooth) {
      const double scale = volume * factorial(dim);
      for (std::size_t q = 0; q < base.points.size(); ++q) {
        Barycentric lam{};
        for (int j = 0; j <= dim; ++j) {
          const double c = base.points[q][j];
          for (int i = 0; i <= dim; ++i) lam[i] += c * frame[j][i];
        }
        sink(to_physical(lam), lam, base.weights[q] * scale);
      }
      return;
    }
    const double child_volume = volume / static_cast<double>(1 << dim);
    for (const auto& child : children) {
      std::array<Barycentric, kMaxDim + 1> sub{};
      for (int j = 0; j <= dim; ++j) {
        for (int a = 0; a <= dim; ++a) {
          const double c = child[j][a];
          if (c == 0.0) continue;
          for (int i = 0; i <= dim; ++i) sub[j][i] += c * frame[a][i];
        }
      }
      visit(sub, depth - 1, child_volume);
    }
  }

  Point to_physical(const Barycentric& lam) const {
    Point x{};
    for (int j = 0; j <= dim; ++j) {
      for (int i = 0; i < dim; ++i) x[i] += lam[j] * parent[j][i];
    }
    return x;
  }
};

}  // namespace

void for_each_subdivided_point(std::span<const Point> corners, int dim, int depth,
                               const QuadRule& base, const QuadraturePointSink& sink,
                               const SmoothnessProbe* probe) {
  const double volume = std::abs(simplex_determinant(corners, dim)) / factorial(dim);
  SubdivisionWalker walker{dim, base, sink, probe, corners, volume, red_children(dim)};
  std::array<Barycentric, kMaxDim + 1> identity{};
  for (int j = 0; j <= dim; ++j) identity[j][j] = 1.0;
  walker.visit(identity, std::max(depth, 0), volume);
}

double integrate_subdivided(const ScalarField& f, std::span<const Point> corners, int dim,
                            int depth, int base_order) {
  double sum = 0.0;
  for_each_subdivided_point(corners, dim, depth, rule(dim, base_order),
                            [&](const Point& x, const Barycentric&, double w) { sum += w * f(x); });
  return sum;
}

double integrate_subdivided(const ScalarField& f, std::span<const Point> corners, int dim,
                            int depth, int base_order, const SmoothnessProbe& probe) {
  double sum = 0.0;
  for_each_subdivided_point(
      corners, dim, depth, rule(dim, base_order),
      [&](const Point& x, const Barycentric&, double w) { sum += w * f(x); }, &probe);
  return sum;
}

}  // namespace stfem
