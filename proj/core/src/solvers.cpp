#include "stfem/solvers.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

namespace stfem {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

void axpy(double a, std::span<const double> x, std::span<double> y) {
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += a * x[i];
}

}  // namespace

Ilu0::Ilu0(const SparseMatrix& a) : n_(a.rows()) {
  if (a.rows() != a.cols()) throw std::invalid_argument("ILU(0) needs a square matrix");
  const auto& offsets = a.row_offsets();
  const auto& cols = a.col_indices();
  std::vector<double> vals = a.values();
  diag_.assign(static_cast<std::size_t>(n_), -1);
  for (int i = 0; i < n_; ++i) {
    for (auto k = offsets[i]; k < offsets[i + 1]; ++k) {
      if (cols[k] == i) diag_[i] = k;
    }
  }

  std::vector<std::int64_t> pos(static_cast<std::size_t>(n_), -1);
  for (int i = 0; i < n_; ++i) {
    for (auto k = offsets[i]; k < offsets[i + 1]; ++k) pos[cols[k]] = k;
    for (auto k = offsets[i]; k < offsets[i + 1] && cols[k] < i; ++k) {
      const int row_k = cols[k];
      const auto dk = diag_[row_k];
      vals[k] /= vals[dk];
      const double lik = vals[k];
      for (auto j = dk + 1; j < offsets[row_k + 1]; ++j) {
        const auto p = pos[cols[j]];
        if (p >= 0) vals[p] -= lik * vals[j];
      }
    }
    for (auto k = offsets[i]; k < offsets[i + 1]; ++k) pos[cols[k]] = -1;
    if (diag_[i] < 0 || vals[diag_[i]] == 0.0 || !std::isfinite(vals[diag_[i]])) {
      throw PreconditionerBreakdown("ILU(0): zero pivot in row " + std::to_string(i));
    }
  }
  lu_ = SparseMatrix(n_, n_, offsets, cols, vals);
  if (lu_.nonzeros() != a.nonzeros()) {
    // Entries cancelled to zero were dropped; the diagonal positions moved.
    diag_.assign(static_cast<std::size_t>(n_), -1);
    for (int i = 0; i < n_; ++i) {
      for (auto k = lu_.row_offsets()[i]; k < lu_.row_offsets()[i + 1]; ++k) {
        if (lu_.col_indices()[k] == i) diag_[i] = k;
      }
    }
  }
}

void Ilu0::apply(std::span<const double> r, std::span<double> z) const {
  const auto& offsets = lu_.row_offsets();
  const auto& cols = lu_.col_indices();
  const auto& vals = lu_.values();
  for (int i = 0; i < n_; ++i) {
    double s = r[i];
    for (auto k = offsets[i]; k < diag_[i]; ++k) s -= vals[k] * z[cols[k]];
    z[i] = s;
  }
  for (int i = n_ - 1; i >= 0; --i) {
    double s = z[i];
    for (auto k = diag_[i] + 1; k < offsets[i + 1]; ++k) s -= vals[k] * z[cols[k]];
    z[i] = s / vals[diag_[i]];
  }
}

LinearOperator Ilu0::as_operator() const {
  return [this](std::span<const double> r, std::span<double> z) { apply(r, z); };
}

LinearOperator as_operator(const SparseMatrix& a, int threads) {
  return [&a, threads](std::span<const double> x, std::span<double> y) { a.multiply(x, y, threads); };
}

LinearOperator jacobi_preconditioner(const SparseMatrix& a) {
  std::vector<double> inv(static_cast<std::size_t>(a.rows()), 1.0);
  for (int i = 0; i < a.rows(); ++i) {
    const double d = a.at(i, i);
    if (d != 0.0) inv[i] = 1.0 / d;
  }
  return [inv = std::move(inv)](std::span<const double> r, std::span<double> z) {
    for (std::size_t i = 0; i < inv.size(); ++i) z[i] = inv[i] * r[i];
  };
}

SolveResult<std::vector<double>> gmres(const LinearOperator& op, const LinearOperator* precond,
                                       std::span<const double> rhs, const GmresOptions& options) {
  const auto start = Clock::now();
  const std::size_t n = rhs.size();
  SolveResult<std::vector<double>> result{std::vector<double>(n, 0.0), {}};
  SolveReport& report = result.report;
  report.preconditioned = precond != nullptr;

  std::vector<double> work(n);
  std::vector<double> r(n);
  // r = P^{-1}(b - A x)
  auto preconditioned_residual = [&](const std::vector<double>& x) {
    op(x, work);
    for (std::size_t i = 0; i < n; ++i) work[i] = rhs[i] - work[i];
    if (precond) {
      (*precond)(work, r);
    } else {
      std::copy(work.begin(), work.end(), r.begin());
    }
    return norm2(r);
  };

  const double b_norm = norm2(rhs);
  double beta = preconditioned_residual(result.x);
  const double beta0 = beta;
  if (beta0 == 0.0 || b_norm == 0.0) {
    report.converged = true;
    report.wall_time = seconds_since(start);
    return result;
  }
  const double target = options.tol * beta0;
  const int m = std::max(1, options.restart);

  std::vector<std::vector<double>> basis(static_cast<std::size_t>(m) + 1, std::vector<double>(n));
  std::vector<std::vector<double>> h(static_cast<std::size_t>(m) + 1, std::vector<double>(m, 0.0));
  std::vector<double> cs(m), sn(m), g(static_cast<std::size_t>(m) + 1);
  std::vector<double> w(n);
  const double eps = std::numeric_limits<double>::epsilon();

  while (report.iterations < options.maxit) {
    for (std::size_t i = 0; i < n; ++i) basis[0][i] = r[i] / beta;
    std::fill(g.begin(), g.end(), 0.0);
    g[0] = beta;
    int j = 0;
    for (; j < m && report.iterations < options.maxit; ++j) {
      op(basis[j], work);
      if (precond) {
        (*precond)(work, w);
      } else {
        std::copy(work.begin(), work.end(), w.begin());
      }
      const double before = norm2(w);
      for (int i = 0; i <= j; ++i) {
        h[i][j] = dot(w, basis[i]);
        axpy(-h[i][j], basis[i], w);
      }
      double after = norm2(w);
      // One Gram-Schmidt pass leaves an orthogonality error of roughly
      // eps * before / after.
      if (after == 0.0 || eps * before / after > options.reorthogonalization_threshold) {
        for (int i = 0; i <= j; ++i) {
          const double c = dot(w, basis[i]);
          h[i][j] += c;
          axpy(-c, basis[i], w);
        }
        after = norm2(w);
      }
      h[j + 1][j] = after;
      if (after > 0.0) {
        for (std::size_t i = 0; i < n; ++i) basis[j + 1][i] = w[i] / after;
      }
      for (int i = 0; i < j; ++i) {
        const double t = cs[i] * h[i][j] + sn[i] * h[i + 1][j];
        h[i + 1][j] = -sn[i] * h[i][j] + cs[i] * h[i + 1][j];
        h[i][j] = t;
      }
      const double denom = std::hypot(h[j][j], h[j + 1][j]);
      cs[j] = denom == 0.0 ? 1.0 : h[j][j] / denom;
      sn[j] = denom == 0.0 ? 0.0 : h[j + 1][j] / denom;
      h[j][j] = denom;
      h[j + 1][j] = 0.0;
      g[j + 1] = -sn[j] * g[j];
      g[j] = cs[j] * g[j];
      ++report.iterations;
      if (std::abs(g[j + 1]) <= target || after == 0.0) {
        ++j;
        break;
      }
    }
    // Back substitution for the Krylov coefficients.
    std::vector<double> y(static_cast<std::size_t>(j), 0.0);
    for (int i = j - 1; i >= 0; --i) {
      double s = g[i];
      for (int k = i + 1; k < j; ++k) s -= h[i][k] * y[k];
      y[i] = h[i][i] == 0.0 ? 0.0 : s / h[i][i];
    }
    for (int i = 0; i < j; ++i) axpy(y[i], basis[i], result.x);
    beta = preconditioned_residual(result.x);
    if (beta <= target) {
      report.converged = true;
      break;
    }
  }
  report.achieved_relative_residual = beta / beta0;
  op(result.x, work);
  for (std::size_t i = 0; i < n; ++i) work[i] = rhs[i] - work[i];
  report.true_relative_residual = norm2(work) / b_norm;
  report.wall_time = seconds_since(start);
  return result;
}

SolveResult<std::vector<double>> cg(const LinearOperator& op, std::span<const double> rhs,
                                    const CgOptions& options, const LinearOperator* precond) {
  const auto start = Clock::now();
  const std::size_t n = rhs.size();
  SolveResult<std::vector<double>> result{std::vector<double>(n, 0.0), {}};
  SolveReport& report = result.report;
  report.preconditioned = precond != nullptr;

  const double b_norm = norm2(rhs);
  if (b_norm == 0.0) {
    report.converged = true;
    report.wall_time = seconds_since(start);
    return result;
  }
  std::vector<double> r(rhs.begin(), rhs.end());
  std::vector<double> z(n), p(n), q(n);
  auto precondition = [&] {
    if (precond) {
      (*precond)(r, z);
    } else {
      std::copy(r.begin(), r.end(), z.begin());
    }
  };
  precondition();
  p = z;
  double rz = dot(r, z);
  double res = 1.0;
  while (report.iterations < options.maxit) {
    op(p, q);
    const double curvature = dot(p, q);
    if (!(curvature > 0.0)) throw SolverError("cg: operator is not positive definite");
    const double alpha = rz / curvature;
    axpy(alpha, p, result.x);
    axpy(-alpha, q, r);
    ++report.iterations;
    res = norm2(r) / b_norm;
    if (res <= options.tol) {
      report.converged = true;
      break;
    }
    precondition();
    const double rz_next = dot(r, z);
    const double beta = rz_next / rz;
    rz = rz_next;
    for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
  }
  report.achieved_relative_residual = res;
  op(result.x, q);
  for (std::size_t i = 0; i < n; ++i) q[i] = rhs[i] - q[i];
  report.true_relative_residual = norm2(q) / b_norm;
  report.wall_time = seconds_since(start);
  return result;
}

Eigen::VectorXd dense_lu_solve(const Eigen::MatrixXd& a, const Eigen::VectorXd& rhs) {
  if (a.rows() != a.cols() || a.rows() != rhs.size()) throw std::invalid_argument("dense_lu_solve: dimension mismatch");
  if (a.rows() > 5000) throw std::invalid_argument("dense_lu_solve: dimension above 5000");
  if (rhs.norm() == 0.0) return Eigen::VectorXd::Zero(rhs.size());
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
  const Eigen::VectorXd diag = lu.matrixLU().diagonal();
  if (diag.size() > 0 && diag.cwiseAbs().minCoeff() == 0.0) throw SolverError("dense_lu_solve: singular matrix");
  Eigen::VectorXd x = lu.solve(rhs);
  // One step of iterative refinement.
  const Eigen::VectorXd r = rhs - a * x;
  x += lu.solve(r);
  const double residual = (rhs - a * x).norm() / rhs.norm();
  if (!std::isfinite(residual) || residual > 1e-10) {
    throw SolverError("dense_lu_solve: matrix is singular to working precision");
  }
  return x;
}

std::vector<double> dense_lu_solve(const SparseMatrix& a, std::span<const double> rhs) {
  const Eigen::Map<const Eigen::VectorXd> b(rhs.data(), static_cast<Eigen::Index>(rhs.size()));
  const Eigen::VectorXd x = dense_lu_solve(a.to_dense(), Eigen::VectorXd(b));
  return {x.data(), x.data() + x.size()};
}

}  // namespace stfem
