#include "stfem/vtk.hpp"

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <stdexcept>
#include <unordered_map>

namespace stfem {

namespace {

constexpr int kVtkTriangle = 5;
constexpr int kVtkTetra = 10;

std::string number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

class SliceBuilder {
 public:
  SliceBuilder(const Mesh& mesh, double time) : mesh_(mesh), time_(time) {}

  int point(int a, int b) {
    if (a > b) std::swap(a, b);
    const std::uint64_t key = (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
    auto it = index_.find(key);
    if (it != index_.end()) return it->second;
    MeshSlice::SlicePoint p;
    const Point& xa = mesh_.vertices()[a];
    const Point& xb = mesh_.vertices()[b];
    const int t = mesh_.dim() - 1;
    if (xa[t] > xb[t]) std::swap(a, b);
    p.a = a;
    p.b = b;
    const Point& lo = mesh_.vertices()[a];
    const Point& hi = mesh_.vertices()[b];
    p.w = (a == b) ? 0.0 : (time_ - lo[t]) / (hi[t] - lo[t]);
    for (int i = 0; i < 3; ++i) p.x[i] = (1.0 - p.w) * lo[i] + p.w * hi[i];
    const int id = static_cast<int>(slice_.points.size());
    slice_.points.push_back(p);
    index_.emplace(key, id);
    return id;
  }

  void add(std::array<int, 4> tet, std::size_t parent) {
    slice_.tets.push_back(tet);
    slice_.parent.push_back(parent);
  }

  MeshSlice take() { return std::move(slice_); }

 private:
  const Mesh& mesh_;
  double time_;
  MeshSlice slice_;
  std::unordered_map<std::uint64_t, int> index_;
};

/// Staircase triangulation of Delta_P x Delta_N joined with the on-plane
/// vertices Z: every monotone lattice path from (0,0) to (|P|-1, |N|-1) gives
/// one simplex with vertices (P[i], N[j]) along the path.
void emit_section(SliceBuilder& builder, const std::vector<int>& pos, const std::vector<int>& neg,
                  const std::vector<int>& zero, std::size_t parent) {
  const int a = static_cast<int>(pos.size()) - 1;
  const int b = static_cast<int>(neg.size()) - 1;
  const int steps = a + b;
  for (int mask = 0; mask < (1 << steps); ++mask) {
    if (__builtin_popcount(static_cast<unsigned>(mask)) != a) continue;
    std::array<int, 4> tet{};
    int n = 0;
    int i = 0, j = 0;
    tet[n++] = builder.point(pos[i], neg[j]);
    for (int s = 0; s < steps; ++s) {
      if (mask & (1 << s)) {
        ++i;
      } else {
        ++j;
      }
      tet[n++] = builder.point(pos[i], neg[j]);
    }
    for (int z : zero) tet[n++] = builder.point(z, z);
    builder.add(tet, parent);
  }
}

void write_header(std::ostream& out, const std::string& title) {
  out << "# vtk DataFile Version 3.0\n" << title << "\nASCII\nDATASET UNSTRUCTURED_GRID\n";
}

void write_fields(std::ostream& out, const char* section, std::size_t count, std::span<const VtkField> fields,
                  const std::function<double(const VtkField&, std::size_t)>& value) {
  if (fields.empty()) return;
  out << section << ' ' << count << '\n';
  for (const VtkField& f : fields) {
    out << "SCALARS " << f.name << " double 1\nLOOKUP_TABLE default\n";
    for (std::size_t i = 0; i < count; ++i) out << number(value(f, i)) << '\n';
  }
}

}  // namespace

MeshSlice slice_at_time(const Mesh& mesh, double time) {
  if (mesh.dim() != 4) throw std::invalid_argument("slice_at_time expects a pentatope mesh");
  SliceBuilder builder(mesh, time);
  const bool from_above = time <= 0.0;
  const auto& vertices = mesh.vertices();
  for (std::size_t k = 0; k < mesh.num_simplices(); ++k) {
    const Simplex& s = mesh.simplices()[k];
    std::vector<int> pos, neg, zero;
    for (int i = 0; i <= 4; ++i) {
      const double t = vertices[s.v[i]][3];
      if (t > time) {
        pos.push_back(s.v[i]);
      } else if (t < time) {
        neg.push_back(s.v[i]);
      } else {
        zero.push_back(s.v[i]);
      }
    }
    if (zero.size() == 4) {
      if ((from_above ? pos.size() : neg.size()) == 1) {
        std::array<int, 4> tet{};
        for (int i = 0; i < 4; ++i) tet[i] = builder.point(zero[i], zero[i]);
        builder.add(tet, k);
      }
      continue;
    }
    if (pos.empty() || neg.empty()) continue;
    emit_section(builder, pos, neg, zero, k);
  }
  return builder.take();
}

void write_vtk(std::ostream& out, const Mesh& mesh, std::span<const VtkField> point_fields,
               std::span<const VtkField> cell_fields, double slice_time, const std::string& title) {
  for (const VtkField& f : point_fields) {
    if (f.values.size() != mesh.num_vertices()) throw std::invalid_argument("point field '" + f.name + "' has wrong size");
  }
  for (const VtkField& f : cell_fields) {
    if (f.values.size() != mesh.num_simplices()) throw std::invalid_argument("cell field '" + f.name + "' has wrong size");
  }
  write_header(out, title);
  const int dim = mesh.dim();
  if (dim == 4) {
    const MeshSlice slice = slice_at_time(mesh, slice_time);
    out << "POINTS " << slice.points.size() << " double\n";
    for (const auto& p : slice.points) out << number(p.x[0]) << ' ' << number(p.x[1]) << ' ' << number(p.x[2]) << '\n';
    out << "CELLS " << slice.tets.size() << ' ' << slice.tets.size() * 5 << '\n';
    for (const auto& t : slice.tets) out << "4 " << t[0] << ' ' << t[1] << ' ' << t[2] << ' ' << t[3] << '\n';
    out << "CELL_TYPES " << slice.tets.size() << '\n';
    for (std::size_t i = 0; i < slice.tets.size(); ++i) out << kVtkTetra << '\n';
    write_fields(out, "POINT_DATA", slice.points.size(), point_fields, [&](const VtkField& f, std::size_t i) {
      const auto& p = slice.points[i];
      return (1.0 - p.w) * f.values[p.a] + p.w * f.values[p.b];
    });
    write_fields(out, "CELL_DATA", slice.tets.size(), cell_fields,
                 [&](const VtkField& f, std::size_t i) { return f.values[slice.parent[i]]; });
    return;
  }
  out << "POINTS " << mesh.num_vertices() << " double\n";
  for (const Point& p : mesh.vertices()) {
    out << number(p[0]) << ' ' << number(p[1]) << ' ' << (dim == 3 ? number(p[2]) : std::string("0")) << '\n';
  }
  const std::size_t nc = mesh.num_simplices();
  out << "CELLS " << nc << ' ' << nc * static_cast<std::size_t>(dim + 2) << '\n';
  for (const Simplex& s : mesh.simplices()) {
    out << dim + 1;
    for (int i = 0; i <= dim; ++i) out << ' ' << s.v[i];
    out << '\n';
  }
  out << "CELL_TYPES " << nc << '\n';
  for (std::size_t i = 0; i < nc; ++i) out << (dim == 2 ? kVtkTriangle : kVtkTetra) << '\n';
  write_fields(out, "POINT_DATA", mesh.num_vertices(), point_fields,
               [](const VtkField& f, std::size_t i) { return f.values[i]; });
  write_fields(out, "CELL_DATA", nc, cell_fields, [](const VtkField& f, std::size_t i) { return f.values[i]; });
}

void write_vtk(const std::string& path, const Mesh& mesh, std::span<const VtkField> point_fields,
               std::span<const VtkField> cell_fields, double slice_time, const std::string& title) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  write_vtk(out, mesh, point_fields, cell_fields, slice_time, title);
}

}  // namespace stfem
