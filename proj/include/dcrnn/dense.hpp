#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace dcrnn {

/// Error type thrown by all library operations.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Row-major dense matrix of 64-bit floats. Holds graph signals X (N x P),
/// hidden states H (N x Q), and parameter blocks.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill_value = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill_value) {}

  static DenseMatrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  double* row(std::size_t r) { return data_.data() + r * cols_; }
  const double* row(std::size_t r) const { return data_.data() + r * cols_; }

  bool same_shape(const DenseMatrix& o) const {
    return rows_ == o.rows_ && cols_ == o.cols_;
  }

  void fill(double v);
  bool all_finite() const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

std::string shape_string(const DenseMatrix& a);

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix transposed(const DenseMatrix& a);

/// y += x (shapes must match).
void add_inplace(DenseMatrix& y, const DenseMatrix& x);
/// y += alpha * x.
void axpy_inplace(DenseMatrix& y, double alpha, const DenseMatrix& x);
/// Elementwise product.
DenseMatrix hadamard(const DenseMatrix& a, const DenseMatrix& b);

double max_abs(const DenseMatrix& a);
double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b);

/// Solves A X = B by Gaussian elimination with partial pivoting.
/// Throws on a (numerically) singular system.
DenseMatrix solve_dense(DenseMatrix a, DenseMatrix b);

}  // namespace dcrnn
