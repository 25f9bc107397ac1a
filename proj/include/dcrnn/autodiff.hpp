#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "dcrnn/dconv.hpp"
#include "dcrnn/dense.hpp"
#include "dcrnn/sparse.hpp"

namespace dcrnn {

/// Learnable tensor: value, gradient accumulator, and Adam moments.
struct ParamTensor {
  std::string name;
  DenseMatrix value;
  DenseMatrix grad;
  DenseMatrix m;
  DenseMatrix v;
  std::uint64_t step_count = 0;

  ParamTensor(std::string name_, DenseMatrix value_)
      : name(std::move(name_)),
        value(std::move(value_)),
        grad(value.rows(), value.cols()),
        m(value.rows(), value.cols()),
        v(value.rows(), value.cols()) {}

  void zero_grad() { grad.fill(0.0); }
};

/// Handle to a node on a Tape.
struct Var {
  std::uint32_t id = kInvalid;
  static constexpr std::uint32_t kInvalid = 0xffffffffu;
  bool valid() const { return id != kInvalid; }
};

/// Owning bundle of the sparse operators a convolution runs over. The bundle
/// must outlive any tape nodes recorded against it.
struct ConvOperators {
  std::vector<SparseMatrix> mats;
  std::vector<SparseMatrix> mats_t;

  static ConvOperators make(std::vector<SparseMatrix> ms);
  std::size_t count() const { return mats.size(); }
  std::vector<const SparseMatrix*> ptrs() const;
  std::vector<const SparseMatrix*> t_ptrs() const;
};

/// Reverse-mode tape over dense matrices. Records primitive operations in
/// topological (append) order; backward() accumulates dLoss/dParam into each
/// recorded ParamTensor's grad. One tape per worker; not thread-safe.
class Tape {
 public:
  /// record_grads = false skips closure creation for cheap inference passes.
  explicit Tape(bool record_grads = true) : record_(record_grads) {}

  bool recording() const { return record_; }
  std::size_t size() const { return nodes_.size(); }
  void clear() { nodes_.clear(); }

  Var constant(DenseMatrix value);
  Var param(ParamTensor& p);

  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  /// scale * a + shift, elementwise.
  Var affine(Var a, double scale, double shift);
  Var matmul(Var a, Var b);
  /// m * x with m a constant (never differentiated); m is copied.
  Var spmm_const(const SparseMatrix& m, Var x);
  Var sigmoid(Var a);
  Var tanh(Var a);
  Var relu(Var a);
  /// x (N x Q) plus a 1 x Q bias broadcast over rows.
  Var add_bias(Var x, Var bias);
  Var concat_cols(Var a, Var b);
  /// Columns [c0, c1).
  Var slice_cols(Var a, std::size_t c0, std::size_t c1);
  Var reduce_sum(Var a);
  Var reduce_mean(Var a);
  /// Elementwise sum of same-shaped vars.
  Var sum_list(const std::vector<Var>& vs);

  /// Fused graph convolution over stacked coefficients (see dconv.hpp for the
  /// layout). Walk powers from the forward pass are cached for backward.
  Var graph_conv(Var x, Var coeffs, const ConvOperators& ops, std::size_t k_max, Activation act);
  /// Fused ChebNet convolution over ops.mats[0] (assumed symmetric).
  Var cheb_conv(Var x, Var coeffs, const ConvOperators& ops, std::size_t k_max, Activation act);

  /// Scalar sum of |pred - target| over mask-true rows; pred is N x 1.
  Var masked_abs_error_sum(Var pred, const DenseMatrix& target,
                           const std::vector<std::uint8_t>& mask);

  const DenseMatrix& value(Var v) const;
  /// Gradient of the last backward() w.r.t. node v (empty if untouched).
  const DenseMatrix& grad(Var v) const;

  /// Accumulates dLoss/d(node) for every recorded node and dLoss/d(param)
  /// into each ParamTensor. Repeated calls without zero_grad accumulate.
  void backward(Var loss);

 private:
  struct Node {
    DenseMatrix value;
    DenseMatrix grad;
    std::function<void(Tape&)> backprop;
    ParamTensor* param = nullptr;
    bool requires_grad = false;
  };

  std::vector<Node> nodes_;
  bool record_ = true;

  Var push(DenseMatrix value, bool requires_grad);
  bool needs_grad(Var v) const;
  void check(Var v) const;
  /// Adds g into the grad buffer of node id (no-op for non-grad nodes).
  void add_grad(std::uint32_t id, const DenseMatrix& g);
  DenseMatrix& grad_buf(std::uint32_t id);
};

std::size_t mask_count(const std::vector<std::uint8_t>& mask);

}  // namespace dcrnn
