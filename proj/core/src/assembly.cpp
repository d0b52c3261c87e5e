#include "stfem/assembly.hpp"

#include <algorithm>
#include <utility>

#include "stfem/parallel.hpp"
#include "stfem/quadrature.hpp"

namespace stfem {

namespace {

struct RowEntries {
  std::vector<std::int64_t> counts;  // per row in the chunk
  std::vector<int> cols;
  std::vector<double> vals;
};

}  // namespace

QuadratureControl load_quadrature(const TargetSpec& target) {
  if (!target.needs_subdivision()) return {3, 0, 2};
  // The oscillatory noise needs more points on the elements the probe leaves whole.
  if (target.noise_delta > 0.0) return {3, 4, 4};
  return {3, 4, 2};
}

Assembler::Assembler(const Mesh& mesh, int threads) : mesh_(mesh), threads_(std::max(threads, 1)) {
  const int dim = mesh.dim();
  const auto& simplices = mesh.simplices();
  incidence_offsets_.assign(mesh.num_vertices() + 1, 0);
  for (const Simplex& s : simplices) {
    for (int i = 0; i <= dim; ++i) ++incidence_offsets_[s.v[i] + 1];
  }
  for (std::size_t v = 0; v < mesh.num_vertices(); ++v) incidence_offsets_[v + 1] += incidence_offsets_[v];
  incidence_.resize(static_cast<std::size_t>(incidence_offsets_.back()));
  std::vector<std::int64_t> next(incidence_offsets_.begin(), incidence_offsets_.end() - 1);
  // Filling in element order keeps every vertex's list sorted.
  for (std::size_t k = 0; k < simplices.size(); ++k) {
    for (int i = 0; i <= dim; ++i) incidence_[next[simplices[k].v[i]]++] = static_cast<int>(k);
  }
}

SparseMatrix Assembler::assemble(Form form, const DofMap& rows, const DofMap& cols) const {
  const int dim = mesh_.dim();
  const int space_dims = dim - 1;
  const double mass_scale = 1.0 / ((dim + 1.0) * (dim + 2.0));
  const std::size_t nv = mesh_.num_vertices();
  if (rows.num_vertices() != nv || cols.num_vertices() != nv) {
    throw std::invalid_argument("dof map does not belong to this mesh");
  }

  const int workers = threads_;
  std::vector<RowEntries> chunks(static_cast<std::size_t>(workers));
  const std::size_t per = (nv + workers - 1) / workers;

  parallel_for(static_cast<std::size_t>(workers), workers, [&](std::size_t wb, std::size_t we) {
    for (std::size_t w = wb; w < we; ++w) {
      RowEntries& out = chunks[w];
      const std::size_t vbegin = std::min(nv, w * per);
      const std::size_t vend = std::min(nv, vbegin + per);
      std::vector<int> slot(cols.count(), -1);
      std::vector<std::pair<int, double>> row;
      for (std::size_t v = vbegin; v < vend; ++v) {
        if (rows.dof(v) < 0) continue;
        row.clear();
        for (auto e = incidence_offsets_[v]; e < incidence_offsets_[v + 1]; ++e) {
          const int k = incidence_[e];
          const Simplex& s = mesh_.simplices()[k];
          const auto corners = mesh_.corners(static_cast<std::size_t>(k));
          int li = 0;
          while (s.v[li] != static_cast<int>(v)) ++li;
          P1Element el;
          if (form == Form::Mass) {
            el.volume = mesh_.volume(static_cast<std::size_t>(k));
          } else {
            el = p1_gradients(std::span<const Point>(corners.data(), dim + 1), dim);
          }
          for (int lj = 0; lj <= dim; ++lj) {
            const int c = cols.dof(static_cast<std::size_t>(s.v[lj]));
            if (c < 0) continue;
            double value = 0.0;
            switch (form) {
              case Form::StiffnessX:
              case Form::Heat: {
                double g = 0.0;
                for (int x = 0; x < space_dims; ++x) g += el.gradients[li][x] * el.gradients[lj][x];
                value = el.volume * g;
                if (form == Form::Heat) {
                  value += el.volume * el.gradients[lj][dim - 1] / (dim + 1.0);
                }
                break;
              }
              case Form::Mass:
                value = el.volume * mass_scale * (li == lj ? 2.0 : 1.0);
                break;
            }
            if (slot[c] < 0) {
              slot[c] = static_cast<int>(row.size());
              row.emplace_back(c, value);
            } else {
              row[slot[c]].second += value;
            }
          }
        }
        for (const auto& [c, value] : row) slot[c] = -1;
        std::sort(row.begin(), row.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        out.counts.push_back(static_cast<std::int64_t>(row.size()));
        for (const auto& [c, value] : row) {
          out.cols.push_back(c);
          out.vals.push_back(value);
        }
      }
    }
  });

  std::vector<std::int64_t> offsets{0};
  offsets.reserve(rows.count() + 1);
  std::vector<int> all_cols;
  std::vector<double> all_vals;
  for (auto& chunk : chunks) {
    for (auto n : chunk.counts) offsets.push_back(offsets.back() + n);
    all_cols.insert(all_cols.end(), chunk.cols.begin(), chunk.cols.end());
    all_vals.insert(all_vals.end(), chunk.vals.begin(), chunk.vals.end());
    chunk = RowEntries{};
  }
  return SparseMatrix(static_cast<int>(rows.count()), static_cast<int>(cols.count()),
                      std::move(offsets), std::move(all_cols), std::move(all_vals));
}

SparseMatrix Assembler::stiffness_x(const DofMap& rows, const DofMap& cols) const {
  return assemble(Form::StiffnessX, rows, cols);
}

SparseMatrix Assembler::heat(const DofMap& test, const DofMap& trial) const {
  return assemble(Form::Heat, test, trial);
}

SparseMatrix Assembler::mass(const DofMap& rows, const DofMap& cols) const {
  return assemble(Form::Mass, rows, cols);
}

std::vector<double> Assembler::load(const DofMap& dofs, const TargetSpec& target,
                                    const QuadratureControl& quad) const {
  const int dim = mesh_.dim();
  const std::size_t ne = mesh_.num_simplices();
  const bool subdivide = target.needs_subdivision() && quad.depth > 0;
  const QuadRule& base = subdivide ? rule(dim, quad.subdivision_order) : rule(dim, quad.order);
  const SmoothnessProbe* probe = target.smooth_on ? &target.smooth_on : nullptr;

  std::vector<double> local(ne * static_cast<std::size_t>(dim + 1), 0.0);
  parallel_for(ne, threads_, [&](std::size_t begin, std::size_t end) {
    for (std::size_t k = begin; k < end; ++k) {
      const auto corners = mesh_.corners(k);
      double* out = &local[k * static_cast<std::size_t>(dim + 1)];
      for_each_subdivided_point(
          std::span<const Point>(corners.data(), dim + 1), dim, subdivide ? quad.depth : 0, base,
          [&](const Point& x, const Barycentric& lam, double w) {
            const double fx = w * target(x);
            for (int j = 0; j <= dim; ++j) out[j] += fx * lam[j];
          },
          probe);
    }
  });

  std::vector<double> f(dofs.count(), 0.0);
  for (std::size_t i = 0; i < dofs.count(); ++i) {
    const int v = dofs.vertex(i);
    double sum = 0.0;
    for (auto e = incidence_offsets_[v]; e < incidence_offsets_[v + 1]; ++e) {
      const int k = incidence_[e];
      const Simplex& s = mesh_.simplices()[k];
      int li = 0;
      while (s.v[li] != v) ++li;
      sum += local[static_cast<std::size_t>(k) * (dim + 1) + li];
    }
    f[i] = sum;
  }
  return f;
}

SparseMatrix assemble_A(const Mesh& mesh, const DofMap& dof_y, int threads) {
  return Assembler(mesh, threads).stiffness_x(dof_y, dof_y);
}

SparseMatrix assemble_B(const Mesh& mesh, const DofMap& dof_x, const DofMap& dof_y, int threads) {
  return Assembler(mesh, threads).heat(dof_y, dof_x);
}

SparseMatrix assemble_M(const Mesh& mesh, const DofMap& dof_x, int threads) {
  return Assembler(mesh, threads).mass(dof_x, dof_x);
}

std::vector<double> assemble_load(const Mesh& mesh, const DofMap& dof_x, const TargetSpec& target,
                                  int threads) {
  return assemble_load(mesh, dof_x, target, load_quadrature(target), threads);
}

std::vector<double> assemble_load(const Mesh& mesh, const DofMap& dof_x, const TargetSpec& target,
                                  const QuadratureControl& quad, int threads) {
  return Assembler(mesh, threads).load(dof_x, target, quad);
}

AssembledOperators assemble_operators(const Mesh& mesh, const DofMap& dof_x, const DofMap& dof_y,
                                      const TargetSpec& target, int threads) {
  Assembler assembler(mesh, threads);
  AssembledOperators ops;
  ops.A = assembler.stiffness_x(dof_y, dof_y);
  ops.B = assembler.heat(dof_y, dof_x);
  ops.M = assembler.mass(dof_x, dof_x);
  ops.f = assembler.load(dof_x, target, load_quadrature(target));
  return ops;
}

}  // namespace stfem
