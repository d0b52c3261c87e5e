#pragma once

#include <Eigen/Dense>

#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "stfem/sparse.hpp"

namespace stfem {

class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised by ILU(0) when a pivot vanishes.
class PreconditionerBreakdown : public SolverError {
 public:
  using SolverError::SolverError;
};

/// y = Op(x); x and y never alias.
using LinearOperator = std::function<void(std::span<const double>, std::span<double>)>;

struct SolveReport {
  int iterations = 0;
  double achieved_relative_residual = 0.0;  ///< the residual the solver controls
  double true_relative_residual = 0.0;      ///< ||b - A x|| / ||b||, when computed
  bool converged = false;
  double wall_time = 0.0;  ///< seconds
  bool preconditioned = false;
};

template <typename T>
struct SolveResult {
  T x;
  SolveReport report;
};

/// Incomplete LU with zero fill-in on the pattern of the input matrix.
class Ilu0 {
 public:
  /// Throws PreconditionerBreakdown on a zero pivot.
  explicit Ilu0(const SparseMatrix& a);

  /// Solves (L U) z = r.
  void apply(std::span<const double> r, std::span<double> z) const;
  [[nodiscard]] LinearOperator as_operator() const;

  [[nodiscard]] int size() const { return n_; }
  /// L (unit diagonal, strictly lower part) and U share the input pattern.
  [[nodiscard]] const SparseMatrix& factors() const { return lu_; }

 private:
  int n_ = 0;
  SparseMatrix lu_;
  std::vector<std::int64_t> diag_;
};

struct GmresOptions {
  double tol = 1e-8;  ///< reduction of the preconditioned residual
  int restart = 100;
  int maxit = 10000;
  /// Reorthogonalize when the estimated loss of orthogonality exceeds this.
  double reorthogonalization_threshold = 1e-8;
};

/// Left-preconditioned restarted GMRES with modified Gram-Schmidt. Stops when
/// ||P^{-1}(b - A x)|| <= tol * ||P^{-1}(b - A x0)||, x0 = 0. Returns the last
/// iterate with converged=false when maxit is exhausted.
SolveResult<std::vector<double>> gmres(const LinearOperator& op, const LinearOperator* precond,
                                       std::span<const double> rhs,
                                       const GmresOptions& options = {});

struct CgOptions {
  double tol = 1e-10;  ///< relative residual ||b - A x|| / ||b||
  int maxit = 10000;
};

/// Conjugate gradients for symmetric positive definite operators, optionally
/// preconditioned. Throws SolverError on non-positive curvature.
SolveResult<std::vector<double>> cg(const LinearOperator& op, std::span<const double> rhs,
                                    const CgOptions& options = {},
                                    const LinearOperator* precond = nullptr);

/// Jacobi preconditioner from the diagonal of a matrix.
LinearOperator jacobi_preconditioner(const SparseMatrix& a);

LinearOperator as_operator(const SparseMatrix& a, int threads = 1);

/// Partial-pivoted dense LU; limited to dimension 5000. Throws SolverError if
/// the matrix is numerically singular.
Eigen::VectorXd dense_lu_solve(const Eigen::MatrixXd& a, const Eigen::VectorXd& rhs);
std::vector<double> dense_lu_solve(const SparseMatrix& a, std::span<const double> rhs);

}  // namespace stfem
