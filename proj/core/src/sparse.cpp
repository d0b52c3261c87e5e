#include "stfem/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "stfem/parallel.hpp"

namespace stfem {

namespace {

constexpr double kDropTolerance = 1e-300;

}  // namespace

SparseMatrix::SparseMatrix(int rows, int cols, std::vector<std::int64_t> row_offsets,
                           std::vector<int> col_indices, std::vector<double> values)
    : rows_(rows), cols_(cols) {
  if (rows < 0 || cols < 0) throw std::invalid_argument("negative matrix dimension");
  if (row_offsets.size() != static_cast<std::size_t>(rows) + 1 || row_offsets.front() != 0 ||
      static_cast<std::size_t>(row_offsets.back()) != col_indices.size() ||
      col_indices.size() != values.size()) {
    throw std::invalid_argument("inconsistent CSR arrays");
  }
  // Compress in place, dropping negligible entries.
  row_offsets_.assign(static_cast<std::size_t>(rows) + 1, 0);
  std::size_t out = 0;
  for (int r = 0; r < rows; ++r) {
    int last = -1;
    for (auto k = row_offsets[r]; k < row_offsets[r + 1]; ++k) {
      const int c = col_indices[k];
      if (c < 0 || c >= cols || c <= last) throw std::invalid_argument("CSR columns must be sorted and in range");
      last = c;
      if (std::abs(values[k]) < kDropTolerance) continue;
      col_indices[out] = c;
      values[out] = values[k];
      ++out;
    }
    row_offsets_[r + 1] = static_cast<std::int64_t>(out);
  }
  col_indices.resize(out);
  values.resize(out);
  col_indices_ = std::move(col_indices);
  values_ = std::move(values);
}

SparseMatrix SparseMatrix::from_triplets(int rows, int cols, std::vector<Triplet> triplets) {
  std::stable_sort(triplets.begin(), triplets.end(), [](const Triplet& a, const Triplet& b) {
    return a.row < b.row || (a.row == b.row && a.col < b.col);
  });
  std::vector<std::int64_t> offsets(static_cast<std::size_t>(rows) + 1, 0);
  std::vector<int> cols_out;
  std::vector<double> vals;
  for (std::size_t i = 0; i < triplets.size();) {
    const Triplet& t = triplets[i];
    if (t.row < 0 || t.row >= rows || t.col < 0 || t.col >= cols) {
      throw std::out_of_range("triplet index out of range");
    }
    double sum = 0.0;
    std::size_t j = i;
    while (j < triplets.size() && triplets[j].row == t.row && triplets[j].col == t.col) {
      sum += triplets[j].value;
      ++j;
    }
    cols_out.push_back(t.col);
    vals.push_back(sum);
    ++offsets[t.row + 1];
    i = j;
  }
  for (int r = 0; r < rows; ++r) offsets[r + 1] += offsets[r];
  return SparseMatrix(rows, cols, std::move(offsets), std::move(cols_out), std::move(vals));
}

SparseMatrix SparseMatrix::identity(int n) {
  std::vector<std::int64_t> offsets(static_cast<std::size_t>(n) + 1);
  std::vector<int> cols(n);
  for (int i = 0; i <= n; ++i) offsets[i] = i;
  for (int i = 0; i < n; ++i) cols[i] = i;
  return SparseMatrix(n, n, std::move(offsets), std::move(cols), std::vector<double>(n, 1.0));
}

SparseMatrix SparseMatrix::from_dense(const Eigen::MatrixXd& dense) {
  std::vector<Triplet> t;
  for (int r = 0; r < dense.rows(); ++r) {
    for (int c = 0; c < dense.cols(); ++c) {
      if (dense(r, c) != 0.0) t.push_back({r, c, dense(r, c)});
    }
  }
  return from_triplets(static_cast<int>(dense.rows()), static_cast<int>(dense.cols()), std::move(t));
}

double SparseMatrix::at(int row, int col) const {
  const auto begin = col_indices_.begin() + row_offsets_[row];
  const auto end = col_indices_.begin() + row_offsets_[row + 1];
  auto it = std::lower_bound(begin, end, col);
  if (it == end || *it != col) return 0.0;
  return values_[static_cast<std::size_t>(it - col_indices_.begin())];
}

void SparseMatrix::multiply(std::span<const double> x, std::span<double> y, int threads) const {
  if (x.size() != static_cast<std::size_t>(cols_) || y.size() != static_cast<std::size_t>(rows_)) {
    throw std::invalid_argument("spmv: dimension mismatch");
  }
  parallel_for(static_cast<std::size_t>(rows_), threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t r = begin; r < end; ++r) {
      double s = 0.0;
      for (auto k = row_offsets_[r]; k < row_offsets_[r + 1]; ++k) s += values_[k] * x[col_indices_[k]];
      y[r] = s;
    }
  });
}

void SparseMatrix::multiply_transpose(std::span<const double> x, std::span<double> y) const {
  if (x.size() != static_cast<std::size_t>(rows_) || y.size() != static_cast<std::size_t>(cols_)) {
    throw std::invalid_argument("spmv_transpose: dimension mismatch");
  }
  std::fill(y.begin(), y.end(), 0.0);
  for (int r = 0; r < rows_; ++r) {
    const double xr = x[r];
    for (auto k = row_offsets_[r]; k < row_offsets_[r + 1]; ++k) y[col_indices_[k]] += values_[k] * xr;
  }
}

SparseMatrix SparseMatrix::transpose() const {
  std::vector<std::int64_t> offsets(static_cast<std::size_t>(cols_) + 1, 0);
  for (int c : col_indices_) ++offsets[c + 1];
  for (int c = 0; c < cols_; ++c) offsets[c + 1] += offsets[c];
  std::vector<int> cols(values_.size());
  std::vector<double> vals(values_.size());
  std::vector<std::int64_t> next(offsets.begin(), offsets.end() - 1);
  for (int r = 0; r < rows_; ++r) {
    for (auto k = row_offsets_[r]; k < row_offsets_[r + 1]; ++k) {
      const auto pos = next[col_indices_[k]]++;
      cols[pos] = r;
      vals[pos] = values_[k];
    }
  }
  return SparseMatrix(cols_, rows_, std::move(offsets), std::move(cols), std::move(vals));
}

SparseMatrix SparseMatrix::scaled(double factor) const {
  std::vector<double> vals(values_);
  for (double& v : vals) v *= factor;
  return SparseMatrix(rows_, cols_, row_offsets_, col_indices_, std::move(vals));
}

Eigen::MatrixXd SparseMatrix::to_dense() const {
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(rows_, cols_);
  for (int r = 0; r < rows_; ++r) {
    for (auto k = row_offsets_[r]; k < row_offsets_[r + 1]; ++k) d(r, col_indices_[k]) = values_[k];
  }
  return d;
}

std::vector<double> spmv(const SparseMatrix& a, std::span<const double> x, int threads) {
  std::vector<double> y(static_cast<std::size_t>(a.rows()));
  a.multiply(x, y, threads);
  return y;
}

std::vector<double> spmv_transpose(const SparseMatrix& a, std::span<const double> x) {
  std::vector<double> y(static_cast<std::size_t>(a.cols()));
  a.multiply_transpose(x, y);
  return y;
}

double symmetry_defect(const SparseMatrix& a) {
  if (a.rows() != a.cols()) return std::numeric_limits<double>::infinity();
  const SparseMatrix t = a.transpose();
  double max_entry = 0.0;
  double max_diff = 0.0;
  for (int r = 0; r < a.rows(); ++r) {
    for (auto k = a.row_offsets()[r]; k < a.row_offsets()[r + 1]; ++k) {
      const int c = a.col_indices()[k];
      max_entry = std::max(max_entry, std::abs(a.values()[k]));
      max_diff = std::max(max_diff, std::abs(a.values()[k] - t.at(r, c)));
    }
    for (auto k = t.row_offsets()[r]; k < t.row_offsets()[r + 1]; ++k) {
      max_diff = std::max(max_diff, std::abs(t.values()[k] - a.at(r, t.col_indices()[k])));
    }
  }
  return max_entry == 0.0 ? max_diff : max_diff / max_entry;
}

SparseMatrix assemble_block(const BlockSaddle& block) {
  if (block.A == nullptr || block.B == nullptr || block.M == nullptr) {
    throw std::invalid_argument("block system is missing a matrix");
  }
  const SparseMatrix& a = *block.A;
  const SparseMatrix& b = *block.B;
  const SparseMatrix& m = *block.M;
  if (!(block.rho > 0.0)) throw std::invalid_argument("rho must be positive");
  if (a.rows() != a.cols() || m.rows() != m.cols() || b.rows() != a.rows() || b.cols() != m.rows()) {
    throw std::invalid_argument("block dimensions are inconsistent");
  }
  const int ny = a.rows();
  const int nx = m.rows();
  const SparseMatrix bt = b.transpose();
  const double inv_rho = 1.0 / block.rho;

  std::vector<std::int64_t> offsets(static_cast<std::size_t>(ny + nx) + 1, 0);
  std::vector<int> cols;
  std::vector<double> vals;
  cols.reserve(a.nonzeros() + 2 * b.nonzeros() + m.nonzeros());
  vals.reserve(cols.capacity());
  for (int r = 0; r < ny; ++r) {
    for (auto k = a.row_offsets()[r]; k < a.row_offsets()[r + 1]; ++k) {
      cols.push_back(a.col_indices()[k]);
      vals.push_back(inv_rho * a.values()[k]);
    }
    for (auto k = b.row_offsets()[r]; k < b.row_offsets()[r + 1]; ++k) {
      cols.push_back(ny + b.col_indices()[k]);
      vals.push_back(b.values()[k]);
    }
    offsets[r + 1] = static_cast<std::int64_t>(cols.size());
  }
  for (int r = 0; r < nx; ++r) {
    for (auto k = bt.row_offsets()[r]; k < bt.row_offsets()[r + 1]; ++k) {
      cols.push_back(bt.col_indices()[k]);
      vals.push_back(bt.values()[k]);
    }
    for (auto k = m.row_offsets()[r]; k < m.row_offsets()[r + 1]; ++k) {
      cols.push_back(ny + m.col_indices()[k]);
      vals.push_back(-m.values()[k]);
    }
    offsets[ny + r + 1] = static_cast<std::int64_t>(cols.size());
  }
  return SparseMatrix(ny + nx, ny + nx, std::move(offsets), std::move(cols), std::move(vals));
}

void write_matrix_market(std::ostream& out, const SparseMatrix& a) {
  out << "%%MatrixMarket matrix coordinate real general\n";
  out << a.rows() << ' ' << a.cols() << ' ' << a.nonzeros() << '\n';
  out << std::setprecision(17);
  for (int r = 0; r < a.rows(); ++r) {
    for (auto k = a.row_offsets()[r]; k < a.row_offsets()[r + 1]; ++k) {
      out << r + 1 << ' ' << a.col_indices()[k] + 1 << ' ' << a.values()[k] << '\n';
    }
  }
}

void write_matrix_market(const std::string& path, const SparseMatrix& a) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  write_matrix_market(out, a);
}

namespace {

std::string next_data_line(std::istream& in) {
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line[0] != '%') return line;
  }
  throw std::runtime_error("MatrixMarket: unexpected end of input");
}

}  // namespace

SparseMatrix read_matrix_market(std::istream& in) {
  std::string header;
  if (!std::getline(in, header) || header.rfind("%%MatrixMarket", 0) != 0) {
    throw std::runtime_error("MatrixMarket: missing banner");
  }
  std::istringstream hs(header);
  std::string banner, object, format, field, symmetry;
  hs >> banner >> object >> format >> field >> symmetry;
  if (object != "matrix" || format != "coordinate" || field != "real") {
    throw std::runtime_error("MatrixMarket: only real coordinate matrices are supported");
  }
  const bool symmetric = symmetry == "symmetric";
  std::istringstream size(next_data_line(in));
  long rows = 0, cols = 0, nnz = 0;
  size >> rows >> cols >> nnz;
  std::vector<Triplet> t;
  t.reserve(static_cast<std::size_t>(symmetric ? 2 * nnz : nnz));
  for (long i = 0; i < nnz; ++i) {
    std::istringstream ls(next_data_line(in));
    long r = 0, c = 0;
    double v = 0.0;
    if (!(ls >> r >> c >> v)) throw std::runtime_error("MatrixMarket: malformed entry");
    t.push_back({static_cast<int>(r - 1), static_cast<int>(c - 1), v});
    if (symmetric && r != c) t.push_back({static_cast<int>(c - 1), static_cast<int>(r - 1), v});
  }
  return SparseMatrix::from_triplets(static_cast<int>(rows), static_cast<int>(cols), std::move(t));
}

SparseMatrix read_matrix_market(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return read_matrix_market(in);
}

void write_matrix_market_vector(std::ostream& out, std::span<const double> v) {
  out << "%%MatrixMarket matrix array real general\n";
  out << v.size() << " 1\n" << std::setprecision(17);
  for (double x : v) out << x << '\n';
}

std::vector<double> read_matrix_market_vector(std::istream& in) {
  std::string header;
  if (!std::getline(in, header) || header.rfind("%%MatrixMarket", 0) != 0) {
    throw std::runtime_error("MatrixMarket: missing banner");
  }
  std::istringstream size(next_data_line(in));
  long rows = 0, cols = 0;
  size >> rows >> cols;
  if (cols != 1) throw std::runtime_error("MatrixMarket: expected a column vector");
  std::vector<double> v(static_cast<std::size_t>(rows));
  for (auto& x : v) {
    std::istringstream ls(next_data_line(in));
    if (!(ls >> x)) throw std::runtime_error("MatrixMarket: malformed vector entry");
  }
  return v;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

}  // namespace stfem
