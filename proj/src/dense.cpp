#include "dcrnn/dense.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

namespace dcrnn {

DenseMatrix DenseMatrix::identity(std::size_t n) {
  DenseMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

void DenseMatrix::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool DenseMatrix::all_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

std::string shape_string(const DenseMatrix& a) {
  return std::to_string(a.rows()) + "x" + std::to_string(a.cols());
}

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.rows()) {
    throw Error("matmul: shape mismatch " + shape_string(a) + " * " + shape_string(b));
  }
  DenseMatrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double* ar = a.row(i);
    double* cr = c.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = ar[k];
      if (aik == 0.0) continue;
      const double* br = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) cr[j] += aik * br[j];
    }
  }
  return c;
}

DenseMatrix transposed(const DenseMatrix& a) {
  DenseMatrix t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  }
  return t;
}

void add_inplace(DenseMatrix& y, const DenseMatrix& x) {
  if (!y.same_shape(x)) {
    throw Error("add_inplace: shape mismatch " + shape_string(y) + " vs " + shape_string(x));
  }
  double* yd = y.data();
  const double* xd = x.data();
  for (std::size_t i = 0; i < y.size(); ++i) yd[i] += xd[i];
}

void axpy_inplace(DenseMatrix& y, double alpha, const DenseMatrix& x) {
  if (!y.same_shape(x)) {
    throw Error("axpy_inplace: shape mismatch " + shape_string(y) + " vs " + shape_string(x));
  }
  double* yd = y.data();
  const double* xd = x.data();
  for (std::size_t i = 0; i < y.size(); ++i) yd[i] += alpha * xd[i];
}

DenseMatrix hadamard(const DenseMatrix& a, const DenseMatrix& b) {
  if (!a.same_shape(b)) {
    throw Error("hadamard: shape mismatch " + shape_string(a) + " vs " + shape_string(b));
  }
  DenseMatrix c(a.rows(), a.cols());
  double* cd = c.data();
  const double* ad = a.data();
  const double* bd = b.data();
  for (std::size_t i = 0; i < a.size(); ++i) cd[i] = ad[i] * bd[i];
  return c;
}

double max_abs(const DenseMatrix& a) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.data()[i]));
  return m;
}

double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b) {
  if (!a.same_shape(b)) {
    throw Error("max_abs_diff: shape mismatch " + shape_string(a) + " vs " + shape_string(b));
  }
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  }
  return m;
}

DenseMatrix solve_dense(DenseMatrix a, DenseMatrix b) {
  if (a.rows() != a.cols()) throw Error("solve_dense: matrix not square: " + shape_string(a));
  if (a.rows() != b.rows()) {
    throw Error("solve_dense: rhs mismatch " + shape_string(a) + " vs " + shape_string(b));
  }
  const std::size_t n = a.rows();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r) {
      if (std::abs(a(r, col)) > std::abs(a(pivot, col))) pivot = r;
    }
    if (std::abs(a(pivot, col)) < 1e-14) throw Error("solve_dense: singular system");
    if (pivot != col) {
      for (std::size_t j = 0; j < n; ++j) std::swap(a(col, j), a(pivot, j));
      for (std::size_t j = 0; j < b.cols(); ++j) std::swap(b(col, j), b(pivot, j));
    }
    const double inv = 1.0 / a(col, col);
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = a(r, col) * inv;
      if (f == 0.0) continue;
      for (std::size_t j = col; j < n; ++j) a(r, j) -= f * a(col, j);
      for (std::size_t j = 0; j < b.cols(); ++j) b(r, j) -= f * b(col, j);
    }
  }
  DenseMatrix x(n, b.cols());
  for (std::size_t ri = n; ri-- > 0;) {
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = b(ri, j);
      for (std::size_t k = ri + 1; k < n; ++k) s -= a(ri, k) * x(k, j);
      x(ri, j) = s / a(ri, ri);
    }
  }
  return x;
}

}  // namespace dcrnn
