#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace stfem {

struct Triplet {
  int row;
  int col;
  double value;
};

/// Compressed-row real matrix. Column indices are strictly increasing within
/// each row; entries with |value| < 1e-300 are not stored.
class SparseMatrix {
 public:
  SparseMatrix() = default;
  /// Takes ownership of CSR arrays; validates the structure.
  SparseMatrix(int rows, int cols, std::vector<std::int64_t> row_offsets,
               std::vector<int> col_indices, std::vector<double> values);

  /// Sums duplicates in (row, col, insertion) order, so the result does not
  /// depend on how the triplets were produced in parallel.
  static SparseMatrix from_triplets(int rows, int cols, std::vector<Triplet> triplets);
  static SparseMatrix identity(int n);
  static SparseMatrix from_dense(const Eigen::MatrixXd& dense);

  [[nodiscard]] int rows() const { return rows_; }
  [[nodiscard]] int cols() const { return cols_; }
  [[nodiscard]] std::size_t nonzeros() const { return values_.size(); }
  [[nodiscard]] const std::vector<std::int64_t>& row_offsets() const { return row_offsets_; }
  [[nodiscard]] const std::vector<int>& col_indices() const { return col_indices_; }
  [[nodiscard]] const std::vector<double>& values() const { return values_; }

  /// Stored value or 0.
  [[nodiscard]] double at(int row, int col) const;

  /// y = A x. Each output entry is written by exactly one worker.
  void multiply(std::span<const double> x, std::span<double> y, int threads = 1) const;
  /// y = A^T x.
  void multiply_transpose(std::span<const double> x, std::span<double> y) const;

  [[nodiscard]] SparseMatrix transpose() const;
  [[nodiscard]] SparseMatrix scaled(double factor) const;
  [[nodiscard]] Eigen::MatrixXd to_dense() const;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<std::int64_t> row_offsets_{0};
  std::vector<int> col_indices_;
  std::vector<double> values_;
};

std::vector<double> spmv(const SparseMatrix& a, std::span<const double> x, int threads = 1);
std::vector<double> spmv_transpose(const SparseMatrix& a, std::span<const double> x);

/// max |A - A^T| relative to max |A|.
double symmetry_defect(const SparseMatrix& a);

/// [[rho^{-1} A, B], [B^T, -M]] acting on [p; u].
struct BlockSaddle {
  const SparseMatrix* A = nullptr;
  const SparseMatrix* B = nullptr;
  const SparseMatrix* M = nullptr;
  double rho = 1.0;
};

/// One CSR with unknown ordering [p; u]. Throws on inconsistent blocks.
SparseMatrix assemble_block(const BlockSaddle& block);

// MatrixMarket coordinate (real general) and array formats.
void write_matrix_market(std::ostream& out, const SparseMatrix& a);
void write_matrix_market(const std::string& path, const SparseMatrix& a);
SparseMatrix read_matrix_market(std::istream& in);
SparseMatrix read_matrix_market(const std::string& path);
void write_matrix_market_vector(std::ostream& out, std::span<const double> v);
std::vector<double> read_matrix_market_vector(std::istream& in);

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);

}  // namespace stfem
