#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "dcrnn/dense.hpp"

namespace dcrnn {

struct Triplet {
  std::size_t row = 0;
  std::size_t col = 0;
  double value = 0.0;
};

/// Compressed row-ordered sparse matrix of 64-bit floats.
/// Column indices are strictly increasing within each row and no explicit
/// zeros are stored. Immutable after construction.
class SparseMatrix {
 public:
  SparseMatrix() = default;

  /// Builds from (row, col, value) entries. Duplicate coordinates are summed;
  /// entries that sum to exactly zero are dropped.
  static SparseMatrix from_triplets(std::size_t n_rows, std::size_t n_cols,
                                    std::vector<Triplet> entries);
  static SparseMatrix identity(std::size_t n);

  std::size_t n_rows() const { return n_rows_; }
  std::size_t n_cols() const { return n_cols_; }
  std::size_t nnz() const { return values_.size(); }

  const std::vector<std::size_t>& row_offsets() const { return row_offsets_; }
  const std::vector<std::size_t>& col_indices() const { return col_indices_; }
  const std::vector<double>& values() const { return values_; }

  DenseMatrix to_dense() const;
  std::vector<Triplet> to_triplets() const;

 private:
  std::size_t n_rows_ = 0;
  std::size_t n_cols_ = 0;
  std::vector<std::size_t> row_offsets_{0};
  std::vector<std::size_t> col_indices_;
  std::vector<double> values_;
};

/// Sparse-dense product a * x. Deterministic: fixed summation order per row.
DenseMatrix spmm(const SparseMatrix& a, const DenseMatrix& x);

/// Returns [T_0, ..., T_{k_max-1}] with T_0 = x and T_{k+1} = p * T_k,
/// using exactly k_max - 1 sparse-dense products.
std::vector<DenseMatrix> diffusion_powers(const SparseMatrix& p, const DenseMatrix& x,
                                          std::size_t k_max);

SparseMatrix transpose(const SparseMatrix& a);
bool is_symmetric(const SparseMatrix& a, double tol = 1e-12);

/// Process-wide count of spmm invocations, for complexity-contract tests.
std::uint64_t spmm_call_count();
void reset_spmm_call_count();

/// Triplet text format: one `row,col,value` record per line.
void save_triplets(const std::filesystem::path& path, const SparseMatrix& a);
SparseMatrix load_triplets(const std::filesystem::path& path, std::size_t n_rows,
                           std::size_t n_cols);

}  // namespace dcrnn
