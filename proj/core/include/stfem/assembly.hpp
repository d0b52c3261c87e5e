#pragma once

#include <vector>

#include "stfem/dofmap.hpp"
#include "stfem/geometry.hpp"
#include "stfem/mesh.hpp"
#include "stfem/sparse.hpp"
#include "stfem/targets.hpp"

namespace stfem {

/// Finite element matrices of the reduced optimality system.
struct AssembledOperators {
  SparseMatrix A;          ///< spatial stiffness on Y_h x Y_h
  SparseMatrix B;          ///< heat operator: rows Y_h (test), columns X_h (trial)
  SparseMatrix M;          ///< L2(Q) mass on X_h x X_h
  std::vector<double> f;   ///< (target, phi_i) for phi_i in X_h
};

/// Quadrature settings for loads and errors involving the target.
struct QuadratureControl {
  int order = 3;  ///< base rule order for smooth targets
  int depth = 0;  ///< red subdivision depth for non-smooth targets
  int subdivision_order = 2;
};

/// Load vector default: rule(d, 3) for smooth targets, depth 4 with an order-2
/// base rule for the others (order 4 for noisy data).
QuadratureControl load_quadrature(const TargetSpec& target);

/// Element loops are distributed over rows (vertices); each row sums its
/// contributions in increasing element order, so results are bitwise
/// independent of `threads`.
class Assembler {
 public:
  Assembler(const Mesh& mesh, int threads = 1);

  /// (grad_x w, grad_x v) over Q.
  [[nodiscard]] SparseMatrix stiffness_x(const DofMap& rows, const DofMap& cols) const;
  /// (d_t u, v) + (grad_x u, grad_x v); rows are test functions.
  [[nodiscard]] SparseMatrix heat(const DofMap& test, const DofMap& trial) const;
  /// Exact P1 mass matrix.
  [[nodiscard]] SparseMatrix mass(const DofMap& rows, const DofMap& cols) const;
  [[nodiscard]] std::vector<double> load(const DofMap& dofs, const TargetSpec& target,
                                         const QuadratureControl& quad) const;

  [[nodiscard]] const Mesh& mesh() const { return mesh_; }

 private:
  enum class Form { StiffnessX, Heat, Mass };
  [[nodiscard]] SparseMatrix assemble(Form form, const DofMap& rows, const DofMap& cols) const;

  const Mesh& mesh_;
  int threads_;
  // vertex -> incident simplices (sorted), CSR layout
  std::vector<std::int64_t> incidence_offsets_;
  std::vector<int> incidence_;
};

SparseMatrix assemble_A(const Mesh& mesh, const DofMap& dof_y, int threads = 1);
SparseMatrix assemble_B(const Mesh& mesh, const DofMap& dof_x, const DofMap& dof_y, int threads = 1);
SparseMatrix assemble_M(const Mesh& mesh, const DofMap& dof_x, int threads = 1);
std::vector<double> assemble_load(const Mesh& mesh, const DofMap& dof_x, const TargetSpec& target,
                                  int threads = 1);
std::vector<double> assemble_load(const Mesh& mesh, const DofMap& dof_x, const TargetSpec& target,
                                  const QuadratureControl& quad, int threads = 1);

AssembledOperators assemble_operators(const Mesh& mesh, const DofMap& dof_x, const DofMap& dof_y,
                                      const TargetSpec& target, int threads = 1);

}  // namespace stfem
