#include "stfem/locator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "stfem/geometry.hpp"

namespace stfem {

namespace {

constexpr double kInsideTol = 1e-12;

int clamp_index(double x, int n) {
  return std::clamp(static_cast<int>(std::floor(x * n)), 0, n - 1);
}

}  // namespace

Barycentric barycentric(const Mesh& mesh, std::size_t k, const Point& x) {
  const int dim = mesh.dim();
  const auto corners = mesh.corners(k);
  const ElementGeometry g = element_geometry(std::span<const Point>(corners.data(), dim + 1), dim);
  Barycentric lambda{};
  double rest = 1.0;
  for (int i = 0; i < dim; ++i) {
    // lambda_{i+1} = (J^{-1} (x - v0))_i, and row i of J^{-1} is column i of J^{-T}.
    double s = 0.0;
    for (int r = 0; r < dim; ++r) s += g.inverse_transpose[r][i] * (x[r] - corners[0][r]);
    lambda[i + 1] = s;
    rest -= s;
  }
  lambda[0] = rest;
  return lambda;
}

PointLocator::PointLocator(const Mesh& mesh) : mesh_(mesh) {
  const int dim = mesh.dim();
  per_axis_ = std::max(1, static_cast<int>(std::floor(
                              std::pow(static_cast<double>(mesh.num_simplices()) / 4.0, 1.0 / dim))));
  std::size_t buckets = 1;
  for (int i = 0; i < dim; ++i) buckets *= static_cast<std::size_t>(per_axis_);

  std::vector<std::vector<int>> lists(buckets);
  for (std::size_t k = 0; k < mesh.num_simplices(); ++k) {
    const auto corners = mesh.corners(k);
    std::array<int, kMaxDim> lo{}, hi{};
    for (int a = 0; a < dim; ++a) {
      double mn = corners[0][a], mx = corners[0][a];
      for (int i = 1; i <= dim; ++i) {
        mn = std::min(mn, corners[i][a]);
        mx = std::max(mx, corners[i][a]);
      }
      lo[a] = clamp_index(mn - kInsideTol, per_axis_);
      hi[a] = clamp_index(mx + kInsideTol, per_axis_);
    }
    std::array<int, kMaxDim> idx = lo;
    while (true) {
      std::size_t b = 0;
      for (int a = dim - 1; a >= 0; --a) b = b * per_axis_ + idx[a];
      lists[b].push_back(static_cast<int>(k));
      int a = 0;
      while (a < dim && ++idx[a] > hi[a]) {
        idx[a] = lo[a];
        ++a;
      }
      if (a == dim) break;
    }
  }
  offsets_.assign(buckets + 1, 0);
  for (std::size_t b = 0; b < buckets; ++b) offsets_[b + 1] = offsets_[b] + static_cast<std::int64_t>(lists[b].size());
  entries_.reserve(static_cast<std::size_t>(offsets_.back()));
  for (auto& l : lists) entries_.insert(entries_.end(), l.begin(), l.end());
}

std::size_t PointLocator::bucket_of(const Point& x) const {
  std::size_t b = 0;
  for (int a = mesh_.dim() - 1; a >= 0; --a) b = b * per_axis_ + clamp_index(x[a], per_axis_);
  return b;
}

std::optional<Location> PointLocator::locate(const Point& x) const {
  const int dim = mesh_.dim();
  for (int a = 0; a < dim; ++a) {
    if (!(x[a] >= -kInsideTol && x[a] <= 1.0 + kInsideTol)) return std::nullopt;
  }
  const std::size_t b = bucket_of(x);
  std::optional<Location> best;
  double best_min = -std::numeric_limits<double>::infinity();
  for (auto e = offsets_[b]; e < offsets_[b + 1]; ++e) {
    const auto k = static_cast<std::size_t>(entries_[e]);
    const Barycentric lambda = barycentric(mesh_, k, x);
    const double mn = *std::min_element(lambda.begin(), lambda.begin() + dim + 1);
    if (mn > best_min) {
      best_min = mn;
      best = Location{k, lambda};
    }
    if (mn >= 0.0) break;
  }
  if (!best || best_min < -1e-9) return std::nullopt;
  return best;
}

double interpolate(const Mesh& mesh, const PointLocator& locator,
                   std::span<const double> vertex_values, const Point& x) {
  const auto loc = locator.locate(x);
  if (!loc) throw std::out_of_range("point outside the space-time cylinder");
  const Simplex& s = mesh.simplices()[loc->simplex];
  double value = 0.0;
  for (int i = 0; i <= mesh.dim(); ++i) value += loc->lambda[i] * vertex_values[s.v[i]];
  return value;
}

}  // namespace stfem
