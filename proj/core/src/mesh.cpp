#include "stfem/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <unordered_map>

#include "stfem/geometry.hpp"

namespace stfem {

namespace {

struct FacetOwner {
  Facet facet;
  int simplex;
};

std::vector<FacetOwner> all_facets(int dim, std::span<const Simplex> simplices) {
  std::vector<FacetOwner> facets;
  facets.reserve(simplices.size() * static_cast<std::size_t>(dim + 1));
  for (std::size_t k = 0; k < simplices.size(); ++k) {
    for (int j = 0; j <= dim; ++j) {
      facets.push_back({facet_of(simplices[k], dim, j), static_cast<int>(k)});
    }
  }
  std::sort(facets.begin(), facets.end(),
            [](const FacetOwner& a, const FacetOwner& b) {
              return a.facet < b.facet || (a.facet == b.facet && a.simplex < b.simplex);
            });
  return facets;
}

BoundaryTag tag_from_coordinates(int dim, std::span<const Point> vertices,
                                 const Facet& facet) {
  const int n = dim;  // facet has d vertices
  auto all_equal = [&](int axis, double value) {
    for (int i = 0; i < n; ++i) {
      if (vertices[facet[i]][axis] != value) return false;
    }
    return true;
  };
  for (int axis = 0; axis < dim - 1; ++axis) {
    if (all_equal(axis, 0.0) || all_equal(axis, 1.0)) return BoundaryTag::Lateral;
  }
  if (all_equal(dim - 1, 0.0)) return BoundaryTag::Initial;
  if (all_equal(dim - 1, 1.0)) return BoundaryTag::Terminal;
  return BoundaryTag::Interior;
}

std::uint64_t edge_key(int a, int b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
         static_cast<std::uint32_t>(b);
}

// Maubach bisection of s with midpoint vertex z.
std::pair<Simplex, Simplex> bisect(const Simplex& s, int dim, int z) {
  const int k = s.tag;
  Simplex first;
  Simplex second;
  // first = (v0, ..., v_{k-1}, z, v_{k+1}, ..., v_d)
  // second = (v1, ..., v_k, z, v_{k+1}, ..., v_d)
  for (int i = 0; i < k; ++i) first.v[i] = s.v[i];
  first.v[k] = z;
  for (int i = 0; i < k; ++i) second.v[i] = s.v[i + 1];
  second.v[k] = z;
  for (int i = k + 1; i <= dim; ++i) {
    first.v[i] = s.v[i];
    second.v[i] = s.v[i];
  }
  const int child_tag = k > 1 ? k - 1 : dim;
  first.tag = second.tag = child_tag;
  first.level = second.level = s.level + 1;
  return {first, second};
}

}  // namespace

const char* to_string(BoundaryTag tag) {
  switch (tag) {
    case BoundaryTag::Interior:
      return "interior";
    case BoundaryTag::Lateral:
      return "lateral";
    case BoundaryTag::Initial:
      return "initial";
    case BoundaryTag::Terminal:
      return "terminal";
  }
  return "unknown";
}

Facet facet_of(const Simplex& s, int dim, int opposite) {
  Facet f{-1, -1, -1, -1};
  int n = 0;
  for (int i = 0; i <= dim; ++i) {
    if (i != opposite) f[n++] = s.v[i];
  }
  std::sort(f.begin(), f.begin() + n);
  return f;
}

std::vector<TaggedFacet> classify_boundary(int dim, std::span<const Point> vertices,
                                           std::span<const Simplex> simplices) {
  const auto facets = all_facets(dim, simplices);
  std::vector<TaggedFacet> boundary;
  for (std::size_t i = 0; i < facets.size();) {
    std::size_t j = i + 1;
    while (j < facets.size() && facets[j].facet == facets[i].facet) ++j;
    if (j - i == 1) {
      const BoundaryTag tag = tag_from_coordinates(dim, vertices, facets[i].facet);
      if (tag == BoundaryTag::Interior) {
        throw MeshError("boundary facet not on the boundary of the unit hypercube");
      }
      boundary.push_back({facets[i].facet, facets[i].simplex, tag});
    } else if (j - i > 2) {
      throw MeshError("facet shared by more than two simplices");
    }
    i = j;
  }
  return boundary;
}

Mesh::Mesh(int dim, std::vector<Point> vertices, std::vector<Simplex> simplices,
           std::optional<int> kuhn_cells)
    : dim_(dim),
      vertices_(std::move(vertices)),
      simplices_(std::move(simplices)),
      kuhn_cells_(kuhn_cells) {
  if (dim_ < 2 || dim_ > kMaxDim) throw std::invalid_argument("mesh dimension must be 2, 3 or 4");
  h_axis_min_ = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < simplices_.size(); ++k) {
    const auto c = corners(k);
    h_max_ = std::max(h_max_, simplex_diameter(c, dim_));
    h_axis_min_ = std::min(h_axis_min_, axis_scale(k));
  }
  boundary_facets_ = classify_boundary(dim_, vertices_, simplices_);
  facet_lookup_.reserve(boundary_facets_.size());
  for (const auto& bf : boundary_facets_) facet_lookup_.emplace(bf.facet, bf.tag);
}

BoundaryTag Mesh::facet_tag(const Facet& facet) const {
  auto it = facet_lookup_.find(facet);
  return it == facet_lookup_.end() ? BoundaryTag::Interior : it->second;
}

std::array<Point, kMaxDim + 1> Mesh::corners(std::size_t k) const {
  std::array<Point, kMaxDim + 1> c{};
  const Simplex& s = simplices_[k];
  for (int i = 0; i <= dim_; ++i) c[i] = vertices_[s.v[i]];
  return c;
}

double Mesh::signed_volume(std::size_t k) const {
  const auto c = corners(k);
  return simplex_determinant(std::span<const Point>(c.data(), dim_ + 1), dim_) /
         factorial(dim_);
}

double Mesh::volume(std::size_t k) const { return std::abs(signed_volume(k)); }

double Mesh::axis_scale(std::size_t k) const {
  return std::pow(factorial(dim_) * volume(k), 1.0 / dim_);
}

Mesh build_kuhn_mesh(int dim, int cells) {
  if (dim < 2 || dim > kMaxDim) throw std::invalid_argument("dimension must be 2, 3 or 4");
  if (cells < 1) throw std::invalid_argument("cells per axis must be at least 1");

  const int n1 = cells + 1;
  std::size_t nv = 1;
  std::size_t nc = 1;
  for (int i = 0; i < dim; ++i) {
    nv *= static_cast<std::size_t>(n1);
    nc *= static_cast<std::size_t>(cells);
  }
  std::array<int, kMaxDim> stride{};
  stride[0] = 1;
  for (int i = 1; i < dim; ++i) stride[i] = stride[i - 1] * n1;

  std::vector<Point> vertices(nv);
  for (std::size_t id = 0; id < nv; ++id) {
    std::size_t r = id;
    Point p{};
    for (int i = 0; i < dim; ++i) {
      p[i] = static_cast<double>(r % n1) / cells;
      r /= n1;
    }
    vertices[id] = p;
  }

  std::vector<std::array<int, kMaxDim>> perms;
  std::array<int, kMaxDim> perm{};
  std::iota(perm.begin(), perm.begin() + dim, 0);
  do {
    perms.push_back(perm);
  } while (std::next_permutation(perm.begin(), perm.begin() + dim));

  std::vector<Simplex> simplices;
  simplices.reserve(nc * perms.size());
  for (std::size_t cell = 0; cell < nc; ++cell) {
    std::size_t r = cell;
    int corner = 0;
    for (int i = 0; i < dim; ++i) {
      corner += static_cast<int>(r % cells) * stride[i];
      r /= cells;
    }
    for (const auto& p : perms) {
      Simplex s;
      s.v[0] = corner;
      for (int j = 0; j < dim; ++j) s.v[j + 1] = s.v[j] + stride[p[j]];
      s.tag = dim;
      simplices.push_back(s);
    }
  }
  return Mesh(dim, std::move(vertices), std::move(simplices), cells);
}

Mesh refine_bisection(const Mesh& mesh, std::span<const int> marked) {
  if (marked.empty()) return mesh;
  const int dim = mesh.dim();
  std::vector<Point> vertices = mesh.vertices();
  std::vector<Simplex> simplices = mesh.simplices();

  std::unordered_map<std::uint64_t, int> midpoints;
  const std::size_t cap = 100 * simplices.size();
  std::size_t bisections = 0;

  auto midpoint_of = [&](int a, int b) {
    auto [it, inserted] = midpoints.try_emplace(edge_key(a, b), -1);
    if (inserted) {
      Point p{};
      for (int i = 0; i < dim; ++i) p[i] = 0.5 * (vertices[a][i] + vertices[b][i]);
      it->second = static_cast<int>(vertices.size());
      vertices.push_back(p);
    }
    return it->second;
  };

  std::vector<int> work;
  std::vector<char> queued(simplices.size(), 0);
  for (int k : marked) {
    if (k < 0 || static_cast<std::size_t>(k) >= simplices.size()) {
      throw std::out_of_range("marked simplex id out of range");
    }
    if (!queued[k]) {
      queued[k] = 1;
      work.push_back(k);
    }
  }

  while (!work.empty()) {
    for (int k : work) {
      const Simplex s = simplices[k];
      const int z = midpoint_of(s.v[0], s.v[s.tag]);
      auto [first, second] = bisect(s, dim, z);
      simplices[k] = first;
      simplices.push_back(second);
      if (++bisections > cap) throw MeshError("bisection closure did not terminate");
    }
    work.clear();
    queued.assign(simplices.size(), 0);
    // Any simplex still holding a bisected edge has a hanging vertex.
    for (std::size_t k = 0; k < simplices.size(); ++k) {
      const Simplex& s = simplices[k];
      bool hanging = false;
      for (int i = 0; i <= dim && !hanging; ++i) {
        for (int j = i + 1; j <= dim; ++j) {
          if (midpoints.count(edge_key(s.v[i], s.v[j]))) {
            hanging = true;
            break;
          }
        }
      }
      if (hanging) {
        queued[k] = 1;
        work.push_back(static_cast<int>(k));
      }
    }
  }
  return Mesh(dim, std::move(vertices), std::move(simplices));
}

Mesh refine_uniform(const Mesh& mesh) {
  if (auto m = mesh.kuhn_cells()) return build_kuhn_mesh(mesh.dim(), 2 * *m);
  Mesh current = mesh;
  for (int sweep = 0; sweep < mesh.dim(); ++sweep) {
    std::vector<int> all(current.num_simplices());
    std::iota(all.begin(), all.end(), 0);
    current = refine_bisection(current, all);
  }
  return current;
}

MeshAudit audit_mesh(const Mesh& mesh) {
  MeshAudit audit;
  const int dim = mesh.dim();
  const auto& vertices = mesh.vertices();
  const auto facets = all_facets(dim, mesh.simplices());
  for (std::size_t i = 0; i < facets.size();) {
    std::size_t j = i + 1;
    while (j < facets.size() && facets[j].facet == facets[i].facet) ++j;
    const std::size_t owners = j - i;
    if (owners == 1) {
      ++audit.boundary_facets;
      // Re-derive from coordinates rather than trusting the stored tag.
      const BoundaryTag geometric = tag_from_coordinates(dim, vertices, facets[i].facet);
      if (geometric == BoundaryTag::Interior) {
        audit.conforming = false;
        audit.message = "single-owner facet inside the domain";
      }
      if (geometric == BoundaryTag::Interior ||
          mesh.facet_tag(facets[i].facet) != geometric) {
        audit.tags_complete = false;
        audit.message = "boundary facet without matching boundary tag";
      }
    } else if (owners == 2) {
      ++audit.interior_facets;
    } else {
      audit.conforming = false;
      audit.message = "facet shared by more than two simplices";
    }
    i = j;
  }
  // Neumaier summation: millions of equal terms would otherwise drift by ~1e-11.
  double sum = 0.0, carry = 0.0;
  for (std::size_t k = 0; k < mesh.num_simplices(); ++k) {
    const double v = std::abs(mesh.signed_volume(k));
    if (v == 0.0) audit.positive_volumes = false;
    const double t = sum + v;
    carry += std::abs(sum) >= v ? (sum - t) + v : (v - t) + sum;
    sum = t;
  }
  audit.volume_sum = sum + carry;
  return audit;
}

double simplex_quality(const Mesh& mesh, std::size_t k) {
  const int dim = mesh.dim();
  const auto c = mesh.corners(k);
  const std::span<const Point> corners(c.data(), dim + 1);
  double area = 0.0;
  for (int j = 0; j <= dim; ++j) area += facet_measure(corners, dim, j);
  const double inradius = dim * mesh.volume(k) / area;
  return inradius / simplex_diameter(corners, dim);
}

}  // namespace stfem
