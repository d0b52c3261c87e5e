#pragma once

#include <array>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "stfem/mesh.hpp"

namespace stfem {

/// Named scalar field: one value per mesh vertex (point data) or per simplex
/// (cell data).
struct VtkField {
  std::string name;
  std::vector<double> values;
};

/// Tetrahedral cut of a pentatope mesh by the hyperplane t = const.
struct MeshSlice {
  struct SlicePoint {
    int a = 0;  ///< mesh vertex below (or on) the plane
    int b = 0;  ///< mesh vertex above; equal to a for vertices on the plane
    double w = 0.0;  ///< position (1 - w) x_a + w x_b
    std::array<double, 3> x{};
  };
  std::vector<SlicePoint> points;
  std::vector<std::array<int, 4>> tets;
  std::vector<std::size_t> parent;  ///< pentatope each tetrahedron came from
};

/// Intersects every pentatope with {t = time}. Pentatopes meeting the plane
/// in a full facet contribute it once, from the side below the plane (from
/// above at t = 0).
MeshSlice slice_at_time(const Mesh& mesh, double time);

/// Legacy-VTK ASCII unstructured grid: triangles for d = 2 (z = 0),
/// tetrahedra for d = 3, and the t = slice_time cut for d = 4.
void write_vtk(std::ostream& out, const Mesh& mesh, std::span<const VtkField> point_fields,
               std::span<const VtkField> cell_fields = {}, double slice_time = 0.5,
               const std::string& title = "stfem");
void write_vtk(const std::string& path, const Mesh& mesh, std::span<const VtkField> point_fields,
               std::span<const VtkField> cell_fields = {}, double slice_time = 0.5,
               const std::string& title = "stfem");

}  // namespace stfem
