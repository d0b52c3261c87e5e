#pragma once

#include <span>
#include <vector>

#include "stfem/mesh.hpp"

namespace stfem {

/// X: state/trial space, zero on the lateral and initial boundary.
/// Y: adjoint/test space, zero on the lateral boundary only.
/// Free: every vertex is an unknown (used for unconstrained assembly).
enum class SpaceRole { X, Y, Free };

const char* to_string(SpaceRole role);

/// Numbering of the unconstrained vertices of a P1 space.
class DofMap {
 public:
  DofMap(SpaceRole role, std::vector<int> vertex_to_dof);

  [[nodiscard]] SpaceRole role() const { return role_; }
  [[nodiscard]] std::size_t count() const { return dof_to_vertex_.size(); }
  [[nodiscard]] std::size_t num_vertices() const { return vertex_to_dof_.size(); }
  /// -1 for constrained vertices.
  [[nodiscard]] int dof(std::size_t vertex) const { return vertex_to_dof_[vertex]; }
  [[nodiscard]] int vertex(std::size_t dof) const { return dof_to_vertex_[dof]; }
  [[nodiscard]] const std::vector<int>& vertex_to_dof() const { return vertex_to_dof_; }
  [[nodiscard]] const std::vector<int>& dof_to_vertex() const { return dof_to_vertex_; }

  /// Values at unknowns from a per-vertex vector.
  [[nodiscard]] std::vector<double> restrict(std::span<const double> per_vertex) const;
  /// Per-vertex vector, zero at constrained vertices.
  [[nodiscard]] std::vector<double> prolongate(std::span<const double> per_dof) const;

 private:
  SpaceRole role_;
  std::vector<int> vertex_to_dof_;
  std::vector<int> dof_to_vertex_;
};

/// Constraints are derived from the classified boundary facets: Y constrains
/// vertices of lateral facets, X additionally those of initial facets.
/// Terminal-time vertices stay free in both spaces.
DofMap build_dofmap(const Mesh& mesh, SpaceRole role);

}  // namespace stfem
