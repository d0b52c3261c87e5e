#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace stfem {

/// Largest supported space-time dimension.
inline constexpr int kMaxDim = 4;

/// Point in the space-time cylinder. The first d-1 entries are space, entry
/// d-1 is time; entries beyond d-1 are zero.
using Point = std::array<double, kMaxDim>;

class MeshError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Boundary facet classification of the unit space-time cylinder.
enum class BoundaryTag : std::uint8_t { Interior, Lateral, Initial, Terminal };

const char* to_string(BoundaryTag tag);

/// d+1 vertex ids. The stored order is the bisection order: the refinement
/// edge of a simplex with generation tag k is (v[0], v[k]).
struct Simplex {
  std::array<int, kMaxDim + 1> v{-1, -1, -1, -1, -1};
  int tag = 0;    ///< Maubach generation tag in 1..d
  int level = 0;  ///< number of bisections since the initial mesh

  /// Local vertex indices of the refinement edge.
  [[nodiscard]] std::array<int, 2> refinement_edge() const { return {0, tag}; }
};

/// Sorted vertex ids of a (d-1)-facet; unused slots are -1.
using Facet = std::array<int, kMaxDim>;

struct FacetHash {
  std::size_t operator()(const Facet& f) const noexcept {
    std::uint64_t h = 1469598103934665603ull;
    for (int id : f) {
      h ^= static_cast<std::uint64_t>(static_cast<std::uint32_t>(id));
      h *= 1099511628211ull;
    }
    return static_cast<std::size_t>(h);
  }
};

struct TaggedFacet {
  Facet facet;
  int simplex;  ///< the unique incident simplex
  BoundaryTag tag;
};

/// Conforming simplicial mesh of the unit hypercube (0,1)^d. Immutable after
/// construction; boundary facets are classified in the constructor.
class Mesh {
 public:
  /// Throws MeshError if the boundary cannot be classified.
  Mesh(int dim, std::vector<Point> vertices, std::vector<Simplex> simplices,
       std::optional<int> kuhn_cells = std::nullopt);

  [[nodiscard]] int dim() const { return dim_; }
  [[nodiscard]] const std::vector<Point>& vertices() const { return vertices_; }
  [[nodiscard]] const std::vector<Simplex>& simplices() const { return simplices_; }
  [[nodiscard]] std::size_t num_vertices() const { return vertices_.size(); }
  [[nodiscard]] std::size_t num_simplices() const { return simplices_.size(); }

  /// Largest simplex diameter.
  [[nodiscard]] double h_max() const { return h_max_; }
  /// Smallest axis scale (d! |K|)^(1/d); equals 1/m on Kuhn(d, m).
  [[nodiscard]] double h_axis_min() const { return h_axis_min_; }
  /// Cells per axis if this mesh is an unmodified Kuhn triangulation.
  [[nodiscard]] std::optional<int> kuhn_cells() const { return kuhn_cells_; }

  [[nodiscard]] const std::vector<TaggedFacet>& boundary_facets() const {
    return boundary_facets_;
  }
  /// Tag of an arbitrary facet; Interior for facets not on the boundary.
  [[nodiscard]] BoundaryTag facet_tag(const Facet& facet) const;

  /// Vertex coordinates of simplex k, in stored order.
  [[nodiscard]] std::array<Point, kMaxDim + 1> corners(std::size_t k) const;
  [[nodiscard]] double volume(std::size_t k) const;
  [[nodiscard]] double signed_volume(std::size_t k) const;
  /// (d! |K|)^(1/d): edge length of the Kuhn cube a simplex of this volume
  /// would come from.
  [[nodiscard]] double axis_scale(std::size_t k) const;

 private:
  int dim_;
  std::vector<Point> vertices_;
  std::vector<Simplex> simplices_;
  std::optional<int> kuhn_cells_;
  double h_max_ = 0.0;
  double h_axis_min_ = 0.0;
  std::vector<TaggedFacet> boundary_facets_;
  std::unordered_map<Facet, BoundaryTag, FacetHash> facet_lookup_;
};

/// Facet of simplex `s` opposite local vertex `opposite`, sorted.
Facet facet_of(const Simplex& s, int dim, int opposite);

/// Freudenthal/Kuhn triangulation of (0,1)^d with m cells per axis.
/// d!*m^d simplices, (m+1)^d vertices. Throws std::invalid_argument on bad input.
Mesh build_kuhn_mesh(int dim, int cells);

/// Halves the mesh size. Kuhn meshes are rebuilt at 2m; other meshes receive
/// d full bisection sweeps.
Mesh refine_uniform(const Mesh& mesh);

/// Bisects every marked simplex at its refinement edge, then closes hanging
/// vertices by further bisection until the mesh is conforming.
/// Throws MeshError if the closure exceeds 100*|simplices| bisections.
Mesh refine_bisection(const Mesh& mesh, std::span<const int> marked);

/// Boundary facets with their tags. Throws MeshError for a boundary facet
/// that matches no rule.
std::vector<TaggedFacet> classify_boundary(int dim, std::span<const Point> vertices,
                                           std::span<const Simplex> simplices);

struct MeshAudit {
  bool conforming = true;      ///< every facet shared by 1 or 2 simplices
  bool positive_volumes = true;
  bool tags_complete = true;   ///< every single-owner facet carries a boundary tag
  double volume_sum = 0.0;
  std::size_t boundary_facets = 0;
  std::size_t interior_facets = 0;
  std::string message;

  [[nodiscard]] bool ok(double volume_tol = 1e-12) const {
    return conforming && positive_volumes && tags_complete &&
           std::abs(volume_sum - 1.0) <= volume_tol;
  }
};

/// Independent check of conformity, volume partition and tag completeness.
MeshAudit audit_mesh(const Mesh& mesh);

/// inradius / diameter of simplex k.
double simplex_quality(const Mesh& mesh, std::size_t k);

}  // namespace stfem
