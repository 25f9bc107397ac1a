#include "dcrnn/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace dcrnn {

namespace {
std::uint64_t g_spmm_calls = 0;
}

std::uint64_t spmm_call_count() { return g_spmm_calls; }
void reset_spmm_call_count() { g_spmm_calls = 0; }

SparseMatrix SparseMatrix::from_triplets(std::size_t n_rows, std::size_t n_cols,
                                         std::vector<Triplet> entries) {
  for (const Triplet& t : entries) {
    if (t.row >= n_rows || t.col >= n_cols) {
      throw Error("sparse: triplet (" + std::to_string(t.row) + "," + std::to_string(t.col) +
                  ") outside " + std::to_string(n_rows) + "x" + std::to_string(n_cols));
    }
  }
  std::sort(entries.begin(), entries.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });

  SparseMatrix m;
  m.n_rows_ = n_rows;
  m.n_cols_ = n_cols;
  m.row_offsets_.assign(n_rows + 1, 0);
  m.col_indices_.reserve(entries.size());
  m.values_.reserve(entries.size());

  std::size_t i = 0;
  for (std::size_t r = 0; r < n_rows; ++r) {
    while (i < entries.size() && entries[i].row == r) {
      double v = entries[i].value;
      const std::size_t c = entries[i].col;
      ++i;
      while (i < entries.size() && entries[i].row == r && entries[i].col == c) {
        v += entries[i].value;  // duplicates are summed
        ++i;
      }
      if (v != 0.0) {
        m.col_indices_.push_back(c);
        m.values_.push_back(v);
      }
    }
    m.row_offsets_[r + 1] = m.values_.size();
  }
  return m;
}

SparseMatrix SparseMatrix::identity(std::size_t n) {
  std::vector<Triplet> t;
  t.reserve(n);
  for (std::size_t i = 0; i < n; ++i) t.push_back({i, i, 1.0});
  return from_triplets(n, n, std::move(t));
}

DenseMatrix SparseMatrix::to_dense() const {
  DenseMatrix d(n_rows_, n_cols_);
  for (std::size_t r = 0; r < n_rows_; ++r) {
    for (std::size_t k = row_offsets_[r]; k < row_offsets_[r + 1]; ++k) {
      d(r, col_indices_[k]) = values_[k];
    }
  }
  return d;
}

std::vector<Triplet> SparseMatrix::to_triplets() const {
  std::vector<Triplet> t;
  t.reserve(nnz());
  for (std::size_t r = 0; r < n_rows_; ++r) {
    for (std::size_t k = row_offsets_[r]; k < row_offsets_[r + 1]; ++k) {
      t.push_back({r, col_indices_[k], values_[k]});
    }
  }
  return t;
}

DenseMatrix spmm(const SparseMatrix& a, const DenseMatrix& x) {
  if (a.n_cols() != x.rows()) {
    throw Error("spmm: shape mismatch " + std::to_string(a.n_rows()) + "x" +
                std::to_string(a.n_cols()) + " * " + shape_string(x));
  }
  ++g_spmm_calls;
  DenseMatrix y(a.n_rows(), x.cols());
  const auto& offsets = a.row_offsets();
  const auto& cols = a.col_indices();
  const auto& vals = a.values();
  for (std::size_t r = 0; r < a.n_rows(); ++r) {
    double* yr = y.row(r);
    for (std::size_t k = offsets[r]; k < offsets[r + 1]; ++k) {
      const double v = vals[k];
      const double* xr = x.row(cols[k]);
      for (std::size_t j = 0; j < x.cols(); ++j) yr[j] += v * xr[j];
    }
  }
  return y;
}

std::vector<DenseMatrix> diffusion_powers(const SparseMatrix& p, const DenseMatrix& x,
                                          std::size_t k_max) {
  if (p.n_rows() != p.n_cols()) {
    throw Error("diffusion_powers: matrix not square: " + std::to_string(p.n_rows()) + "x" +
                std::to_string(p.n_cols()));
  }
  if (p.n_cols() != x.rows()) {
    throw Error("diffusion_powers: shape mismatch " + std::to_string(p.n_cols()) + " vs " +
                shape_string(x));
  }
  if (k_max < 1) throw Error("diffusion_powers: k_max must be >= 1");
  std::vector<DenseMatrix> out;
  out.reserve(k_max);
  out.push_back(x);
  for (std::size_t k = 1; k < k_max; ++k) out.push_back(spmm(p, out.back()));
  return out;
}

SparseMatrix transpose(const SparseMatrix& a) {
  std::vector<Triplet> t = a.to_triplets();
  for (Triplet& e : t) std::swap(e.row, e.col);
  return SparseMatrix::from_triplets(a.n_cols(), a.n_rows(), std::move(t));
}

bool is_symmetric(const SparseMatrix& a, double tol) {
  if (a.n_rows() != a.n_cols()) return false;
  const SparseMatrix at = transpose(a);
  if (at.nnz() != a.nnz()) return false;
  const auto& ro = a.row_offsets();
  const auto& rt = at.row_offsets();
  for (std::size_t r = 0; r <= a.n_rows(); ++r) {
    if (ro[r] != rt[r]) return false;
  }
  for (std::size_t k = 0; k < a.nnz(); ++k) {
    if (a.col_indices()[k] != at.col_indices()[k]) return false;
    if (std::abs(a.values()[k] - at.values()[k]) > tol) return false;
  }
  return true;
}

void save_triplets(const std::filesystem::path& path, const SparseMatrix& a) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open for writing: " + path.string());
  char buf[64];
  for (const Triplet& t : a.to_triplets()) {
    std::snprintf(buf, sizeof(buf), "%.17g", t.value);
    out << t.row << ',' << t.col << ',' << buf << '\n';
  }
}

SparseMatrix load_triplets(const std::filesystem::path& path, std::size_t n_rows,
                           std::size_t n_cols) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open: " + path.string());
  std::vector<Triplet> t;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::size_t r = 0, c = 0;
    double v = 0.0;
    if (std::sscanf(line.c_str(), "%zu,%zu,%lf", &r, &c, &v) != 3) {
      throw Error("bad triplet record at " + path.string() + ":" + std::to_string(line_no));
    }
    t.push_back({r, c, v});
  }
  return SparseMatrix::from_triplets(n_rows, n_cols, std::move(t));
}

}  // namespace dcrnn
