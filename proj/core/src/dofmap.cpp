#include "stfem/dofmap.hpp"

#include <stdexcept>

namespace stfem {

const char* to_string(SpaceRole role) {
  switch (role) {
    case SpaceRole::X:
      return "X";
    case SpaceRole::Y:
      return "Y";
    case SpaceRole::Free:
      return "free";
  }
  return "?";
}

DofMap::DofMap(SpaceRole role, std::vector<int> vertex_to_dof)
    : role_(role), vertex_to_dof_(std::move(vertex_to_dof)) {
  int next = 0;
  for (std::size_t v = 0; v < vertex_to_dof_.size(); ++v) {
    if (vertex_to_dof_[v] < 0) continue;
    if (vertex_to_dof_[v] != next) throw std::invalid_argument("dof numbering must be dense and ordered");
    dof_to_vertex_.push_back(static_cast<int>(v));
    ++next;
  }
}

std::vector<double> DofMap::restrict(std::span<const double> per_vertex) const {
  if (per_vertex.size() != vertex_to_dof_.size()) throw std::invalid_argument("restrict: size mismatch");
  std::vector<double> out(count());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = per_vertex[dof_to_vertex_[i]];
  return out;
}

std::vector<double> DofMap::prolongate(std::span<const double> per_dof) const {
  if (per_dof.size() != count()) throw std::invalid_argument("prolongate: size mismatch");
  std::vector<double> out(vertex_to_dof_.size(), 0.0);
  for (std::size_t i = 0; i < per_dof.size(); ++i) out[dof_to_vertex_[i]] = per_dof[i];
  return out;
}

DofMap build_dofmap(const Mesh& mesh, SpaceRole role) {
  std::vector<char> constrained(mesh.num_vertices(), 0);
  if (role != SpaceRole::Free) {
    const int dim = mesh.dim();
    for (const TaggedFacet& bf : mesh.boundary_facets()) {
      const bool fixed = bf.tag == BoundaryTag::Lateral ||
                         (role == SpaceRole::X && bf.tag == BoundaryTag::Initial);
      if (!fixed) continue;
      for (int i = 0; i < dim; ++i) constrained[bf.facet[i]] = 1;
    }
  }
  std::vector<int> v2d(mesh.num_vertices(), -1);
  int next = 0;
  for (std::size_t v = 0; v < v2d.size(); ++v) {
    if (!constrained[v]) v2d[v] = next++;
  }
  return DofMap(role, std::move(v2d));
}

}  // namespace stfem
