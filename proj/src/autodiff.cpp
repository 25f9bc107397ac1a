#include "dcrnn/autodiff.hpp"

#include <cmath>

namespace dcrnn {

ConvOperators ConvOperators::make(std::vector<SparseMatrix> ms) {
  ConvOperators ops;
  ops.mats = std::move(ms);
  ops.mats_t.reserve(ops.mats.size());
  for (const SparseMatrix& m : ops.mats) ops.mats_t.push_back(transpose(m));
  return ops;
}

std::vector<const SparseMatrix*> ConvOperators::ptrs() const {
  std::vector<const SparseMatrix*> p;
  p.reserve(mats.size());
  for (const SparseMatrix& m : mats) p.push_back(&m);
  return p;
}

std::vector<const SparseMatrix*> ConvOperators::t_ptrs() const {
  std::vector<const SparseMatrix*> p;
  p.reserve(mats_t.size());
  for (const SparseMatrix& m : mats_t) p.push_back(&m);
  return p;
}

std::size_t mask_count(const std::vector<std::uint8_t>& mask) {
  std::size_t c = 0;
  for (std::uint8_t m : mask) c += m ? 1 : 0;
  return c;
}

void Tape::check(Var v) const {
  if (!v.valid() || v.id >= nodes_.size()) throw Error("tape: invalid node handle");
}

bool Tape::needs_grad(Var v) const {
  check(v);
  return nodes_[v.id].requires_grad;
}

const DenseMatrix& Tape::value(Var v) const {
  check(v);
  return nodes_[v.id].value;
}

const DenseMatrix& Tape::grad(Var v) const {
  check(v);
  return nodes_[v.id].grad;
}

Var Tape::push(DenseMatrix value, bool requires_grad) {
  if (nodes_.size() >= Var::kInvalid) throw Error("tape: node limit exceeded");
  Node n;
  n.value = std::move(value);
  n.requires_grad = record_ && requires_grad;
  nodes_.push_back(std::move(n));
  return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

DenseMatrix& Tape::grad_buf(std::uint32_t id) {
  Node& n = nodes_[id];
  if (n.grad.empty()) n.grad = DenseMatrix(n.value.rows(), n.value.cols());
  return n.grad;
}

void Tape::add_grad(std::uint32_t id, const DenseMatrix& g) {
  Node& n = nodes_[id];
  if (!n.requires_grad) return;
  add_inplace(grad_buf(id), g);
}

Var Tape::constant(DenseMatrix value) { return push(std::move(value), false); }

Var Tape::param(ParamTensor& p) {
  Var v = push(p.value, true);
  if (!record_) return v;
  Node& n = nodes_[v.id];
  n.param = &p;
  n.backprop = [self = v.id](Tape& t) {
    Node& node = t.nodes_[self];
    add_inplace(node.param->grad, node.grad);
  };
  return v;
}

Var Tape::add(Var a, Var b) {
  const DenseMatrix& va = value(a);
  const DenseMatrix& vb = value(b);
  if (!va.same_shape(vb)) {
    throw Error("tape add: shape mismatch " + shape_string(va) + " vs " + shape_string(vb));
  }
  DenseMatrix out = va;
  add_inplace(out, vb);
  Var v = push(std::move(out), needs_grad(a) || needs_grad(b));
  if (nodes_[v.id].requires_grad) {
    nodes_[v.id].backprop = [self = v.id, ia = a.id, ib = b.id](Tape& t) {
      const DenseMatrix& g = t.nodes_[self].grad;
      t.add_grad(ia, g);
      t.add_grad(ib, g);
    };
  }
  return v;
}

Var Tape::sub(Var a, Var b) {
  const DenseMatrix& va = value(a);
  const DenseMatrix& vb = value(b);
  if (!va.same_shape(vb)) {
    throw Error("tape sub: shape mismatch " + shape_string(va) + " vs " + shape_string(vb));
  }
  DenseMatrix out = va;
  axpy_inplace(out, -1.0, vb);
  Var v = push(std::move(out), needs_grad(a) || needs_grad(b));
  if (nodes_[v.id].requires_grad) {
    nodes_[v.id].backprop = [self = v.id, ia = a.id, ib = b.id](Tape& t) {
      const DenseMatrix& g = t.nodes_[self].grad;
      t.add_grad(ia, g);
      if (t.nodes_[ib].requires_grad) axpy_inplace(t.grad_buf(ib), -1.0, g);
    };
  }
  return v;
}

Var Tape::mul(Var a, Var b) {
  DenseMatrix out = hadamard(value(a), value(b));
  Var v = push(std::move(out), needs_grad(a) || needs_grad(b));
  if (nodes_[v.id].requires_grad) {
    nodes_[v.id].backprop = [self = v.id, ia = a.id, ib = b.id](Tape& t) {
      const DenseMatrix& g = t.nodes_[self].grad;
      if (t.nodes_[ia].requires_grad) {
        DenseMatrix ga = hadamard(g, t.nodes_[ib].value);
        add_inplace(t.grad_buf(ia), ga);
      }
      if (t.nodes_[ib].requires_grad) {
        DenseMatrix gb = hadamard(g, t.nodes_[ia].value);
        add_inplace(t.grad_buf(ib), gb);
      }
    };
  }
  return v;
}

Var Tape::affine(Var a, double scale, double shift) {
  const DenseMatrix& va = value(a);
  DenseMatrix out(va.rows(), va.cols());
  for (std::size_t i = 0; i < va.size(); ++i) out.data()[i] = scale * va.data()[i] + shift;
  Var v = push(std::move(out), needs_grad(a));
  if (nodes_[v.id].requires_grad) {
    nodes_[v.id].backprop = [self = v.id, ia = a.id, scale](Tape& t) {
      if (t.nodes_[ia].requires_grad) {
        axpy_inplace(t.grad_buf(ia), scale, t.nodes_[self].grad);
      }
    };
  }
  return v;
}

Var Tape::matmul(Var a, Var b) {
  DenseMatrix out = dcrnn::matmul(value(a), value(b));
  Var v = push(std::move(out), needs_grad(a) || needs_grad(b));
  if (nodes_[v.id].requires_grad) {
    nodes_[v.id].backprop = [self = v.id, ia = a.id, ib = b.id](Tape& t) {
      const DenseMatrix& g = t.nodes_[self].grad;
      if (t.nodes_[ia].requires_grad) {
        DenseMatrix ga = dcrnn::matmul(g, transposed(t.nodes_[ib].value));
        add_inplace(t.grad_buf(ia), ga);
      }
      if (t.nodes_[ib].requires_grad) {
        DenseMatrix gb = dcrnn::matmul(transposed(t.nodes_[ia].value), g);
        add_inplace(t.grad_buf(ib), gb);
      }
    };
  }
  return v;
}

Var Tape::spmm_const(const SparseMatrix& m, Var x) {
  DenseMatrix out = spmm(m, value(x));
  Var v = push(std::move(out), needs_grad(x));
  if (nodes_[v.id].requires_grad) {
    nodes_[v.id].backprop = [self = v.id, ix = x.id, mt = transpose(m)](Tape& t) {
      if (t.nodes_[ix].requires_grad) {
        DenseMatrix gx = spmm(mt, t.nodes_[self].grad);
        add_inplace(t.grad_buf(ix), gx);
      }
    };
  }
  return v;
}

Var Tape::sigmoid(Var a) {
  const DenseMatrix& va = value(a);
  DenseMatrix out(va.rows(), va.cols());
  for (std::size_t i = 0; i < va.size(); ++i) out.data()[i] = 1.0 / (1.0 + std::exp(-va.data()[i]));
  Var v = push(std::move(out), needs_grad(a));
  if (nodes_[v.id].requires_grad) {
    nodes_[v.id].backprop = [self = v.id, ia = a.id](Tape& t) {
      if (!t.nodes_[ia].requires_grad) return;
      const Node& n = t.nodes_[self];
      DenseMatrix& ga = t.grad_buf(ia);
      for (std::size_t i = 0; i < n.value.size(); ++i) {
        const double y = n.value.data()[i];
        ga.data()[i] += n.grad.data()[i] * y * (1.0 - y);
      }
    };
  }
  return v;
}

Var Tape::tanh(Var a) {
  const DenseMatrix& va = value(a);
  DenseMatrix out(va.rows(), va.cols());
  for (std::size_t i = 0; i < va.size(); ++i) out.data()[i] = std::tanh(va.data()[i]);
  Var v = push(std::move(out), needs_grad(a));
  if (nodes_[v.id].requires_grad) {
    nodes_[v.id].backprop = [self = v.id, ia = a.id](Tape& t) {
      if (!t.nodes_[ia].requires_grad) return;
      const Node& n = t.nodes_[self];
      DenseMatrix& ga = t.grad_buf(ia);
      for (std::size_t i = 0; i < n.value.size(); ++i) {
        const double y = n.value.data()[i];
        ga.data()[i] += n.grad.data()[i] * (1.0 - y * y);
      }
    };
  }
  return v;
}

Var Tape::relu(Var a) {
  const DenseMatrix& va = value(a);
  DenseMatrix out(va.rows(), va.cols());
  for (std::size_t i = 0; i < va.size(); ++i) out.data()[i] = va.data()[i] > 0.0 ? va.data()[i] : 0.0;
  Var v = push(std::move(out), needs_grad(a));
  if (nodes_[v.id].requires_grad) {
    nodes_[v.id].backprop = [self = v.id, ia = a.id](Tape& t) {
      if (!t.nodes_[ia].requires_grad) return;
      const Node& n = t.nodes_[self];
      DenseMatrix& ga = t.grad_buf(ia);
      for (std::size_t i = 0; i < n.value.size(); ++i) {
        if (n.value.data()[i] > 0.0) ga.data()[i] += n.grad.data()[i];
      }
    };
  }
  return v;
}

Var Tape::add_bias(Var x, Var bias) {
  const DenseMatrix& vx = value(x);
  const DenseMatrix& vb = value(bias);
  if (vb.rows() != 1 || vb.cols() != vx.cols()) {
    throw Error("tape add_bias: bias " + shape_string(vb) + " does not broadcast over " +
                shape_string(vx));
  }
  DenseMatrix out = vx;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    double* orow = out.row(r);
    for (std::size_t c = 0; c < out.cols(); ++c) orow[c] += vb(0, c);
  }
  Var v = push(std::move(out), needs_grad(x) || needs_grad(bias));
  if (nodes_[v.id].requires_grad) {
    nodes_[v.id].backprop = [self = v.id, ix = x.id, ib = bias.id](Tape& t) {
      const DenseMatrix& g = t.nodes_[self].grad;
      t.add_grad(ix, g);
      if (t.nodes_[ib].requires_grad) {
        DenseMatrix& gb = t.grad_buf(ib);
        for (std::size_t r = 0; r < g.rows(); ++r) {
          const double* gr = g.row(r);
          for (std::size_t c = 0; c < g.cols(); ++c) gb(0, c) += gr[c];
        }
      }
    };
  }
  return v;
}

Var Tape::concat_cols(Var a, Var b) {
  const DenseMatrix& va = value(a);
  const DenseMatrix& vb = value(b);
  if (va.rows() != vb.rows()) {
    throw Error("tape concat_cols: row mismatch " + shape_string(va) + " vs " + shape_string(vb));
  }
  const std::size_t split = va.cols();  // push may reallocate; va dangles after
  DenseMatrix out(va.rows(), va.cols() + vb.cols());
  for (std::size_t r = 0; r < va.rows(); ++r) {
    double* orow = out.row(r);
    const double* ar = va.row(r);
    const double* br = vb.row(r);
    for (std::size_t c = 0; c < va.cols(); ++c) orow[c] = ar[c];
    for (std::size_t c = 0; c < vb.cols(); ++c) orow[va.cols() + c] = br[c];
  }
  Var v = push(std::move(out), needs_grad(a) || needs_grad(b));
  if (nodes_[v.id].requires_grad) {
    nodes_[v.id].backprop = [self = v.id, ia = a.id, ib = b.id, split](Tape& t) {
      const DenseMatrix& g = t.nodes_[self].grad;
      if (t.nodes_[ia].requires_grad) {
        DenseMatrix& ga = t.grad_buf(ia);
        for (std::size_t r = 0; r < g.rows(); ++r) {
          for (std::size_t c = 0; c < split; ++c) ga(r, c) += g(r, c);
        }
      }
      if (t.nodes_[ib].requires_grad) {
        DenseMatrix& gb = t.grad_buf(ib);
        for (std::size_t r = 0; r < g.rows(); ++r) {
          for (std::size_t c = split; c < g.cols(); ++c) gb(r, c - split) += g(r, c);
        }
      }
    };
  }
  return v;
}

Var Tape::slice_cols(Var a, std::size_t c0, std::size_t c1) {
  const DenseMatrix& va = value(a);
  if (c0 >= c1 || c1 > va.cols()) {
    throw Error("tape slice_cols: bad range [" + std::to_string(c0) + "," + std::to_string(c1) +
                ") for " + shape_string(va));
  }
  DenseMatrix out(va.rows(), c1 - c0);
  for (std::size_t r = 0; r < va.rows(); ++r) {
    for (std::size_t c = c0; c < c1; ++c) out(r, c - c0) = va(r, c);
  }
  Var v = push(std::move(out), needs_grad(a));
  if (nodes_[v.id].requires_grad) {
    nodes_[v.id].backprop = [self = v.id, ia = a.id, c0](Tape& t) {
      if (!t.nodes_[ia].requires_grad) return;
      const DenseMatrix& g = t.nodes_[self].grad;
      DenseMatrix& ga = t.grad_buf(ia);
      for (std::size_t r = 0; r < g.rows(); ++r) {
        for (std::size_t c = 0; c < g.cols(); ++c) ga(r, c0 + c) += g(r, c);
      }
    };
  }
  return v;
}

Var Tape::reduce_sum(Var a) {
  const DenseMatrix& va = value(a);
  DenseMatrix out(1, 1);
  for (std::size_t i = 0; i < va.size(); ++i) out(0, 0) += va.data()[i];
  Var v = push(std::move(out), needs_grad(a));
  if (nodes_[v.id].requires_grad) {
    nodes_[v.id].backprop = [self = v.id, ia = a.id](Tape& t) {
      if (!t.nodes_[ia].requires_grad) return;
      const double g = t.nodes_[self].grad(0, 0);
      DenseMatrix& ga = t.grad_buf(ia);
      for (std::size_t i = 0; i < ga.size(); ++i) ga.data()[i] += g;
    };
  }
  return v;
}

Var Tape::reduce_mean(Var a) {
  const std::size_t n = value(a).size();
  if (n == 0) throw Error("tape reduce_mean: empty input");
  return affine(reduce_sum(a), 1.0 / static_cast<double>(n), 0.0);
}

Var Tape::sum_list(const std::vector<Var>& vs) {
  if (vs.empty()) throw Error("tape sum_list: empty list");
  const DenseMatrix& v0 = value(vs[0]);
  DenseMatrix out = v0;
  bool any_grad = needs_grad(vs[0]);
  for (std::size_t i = 1; i < vs.size(); ++i) {
    add_inplace(out, value(vs[i]));
    any_grad = any_grad || needs_grad(vs[i]);
  }
  Var v = push(std::move(out), any_grad);
  if (nodes_[v.id].requires_grad) {
    std::vector<std::uint32_t> ids;
    ids.reserve(vs.size());
    for (Var x : vs) ids.push_back(x.id);
    nodes_[v.id].backprop = [self = v.id, ids = std::move(ids)](Tape& t) {
      const DenseMatrix& g = t.nodes_[self].grad;
      for (std::uint32_t id : ids) t.add_grad(id, g);
    };
  }
  return v;
}

Var Tape::graph_conv(Var x, Var coeffs, const ConvOperators& ops, std::size_t k_max,
                     Activation act) {
  std::vector<std::vector<DenseMatrix>> powers;
  const bool grad = needs_grad(x) || needs_grad(coeffs);
  DenseMatrix out = graph_conv_forward(value(x), value(coeffs), ops.ptrs(), k_max, act,
                                       (record_ && grad) ? &powers : nullptr);
  Var v = push(std::move(out), grad);
  if (nodes_[v.id].requires_grad) {
    nodes_[v.id].backprop = [self = v.id, ix = x.id, ic = coeffs.id, opsp = &ops, k_max, act,
                             powers = std::move(powers)](Tape& t) {
      const Node& n = t.nodes_[self];
      DenseMatrix grad_pre = n.grad;
      if (act != Activation::identity) {
        for (std::size_t i = 0; i < grad_pre.size(); ++i) {
          grad_pre.data()[i] *= activation_grad_from_output(act, n.value.data()[i]);
        }
      }
      const bool wants_x = t.nodes_[ix].requires_grad;
      DenseMatrix gx;
      if (wants_x) gx = DenseMatrix(t.nodes_[ix].value.rows(), t.nodes_[ix].value.cols());
      if (t.nodes_[ic].requires_grad) {
        graph_conv_backward(grad_pre, t.nodes_[ic].value, powers, opsp->t_ptrs(), k_max,
                            t.grad_buf(ic), wants_x ? &gx : nullptr);
      } else {
        DenseMatrix scratch(t.nodes_[ic].value.rows(), t.nodes_[ic].value.cols());
        graph_conv_backward(grad_pre, t.nodes_[ic].value, powers, opsp->t_ptrs(), k_max, scratch,
                            wants_x ? &gx : nullptr);
      }
      if (wants_x) add_inplace(t.grad_buf(ix), gx);
    };
  }
  return v;
}

Var Tape::cheb_conv(Var x, Var coeffs, const ConvOperators& ops, std::size_t k_max,
                    Activation act) {
  if (ops.count() != 1) throw Error("tape cheb_conv: expected a single operator");
  std::vector<DenseMatrix> basis;
  const bool grad = needs_grad(x) || needs_grad(coeffs);
  DenseMatrix out = cheb_conv_forward(value(x), value(coeffs), ops.mats[0], k_max, act,
                                      (record_ && grad) ? &basis : nullptr);
  Var v = push(std::move(out), grad);
  if (nodes_[v.id].requires_grad) {
    nodes_[v.id].backprop = [self = v.id, ix = x.id, ic = coeffs.id, opsp = &ops, k_max, act,
                             basis = std::move(basis)](Tape& t) {
      const Node& n = t.nodes_[self];
      DenseMatrix grad_pre = n.grad;
      if (act != Activation::identity) {
        for (std::size_t i = 0; i < grad_pre.size(); ++i) {
          grad_pre.data()[i] *= activation_grad_from_output(act, n.value.data()[i]);
        }
      }
      const bool wants_x = t.nodes_[ix].requires_grad;
      DenseMatrix gx;
      if (wants_x) gx = DenseMatrix(t.nodes_[ix].value.rows(), t.nodes_[ix].value.cols());
      if (t.nodes_[ic].requires_grad) {
        cheb_conv_backward(grad_pre, t.nodes_[ic].value, basis, opsp->mats[0], k_max,
                           t.grad_buf(ic), wants_x ? &gx : nullptr);
      } else {
        DenseMatrix scratch(t.nodes_[ic].value.rows(), t.nodes_[ic].value.cols());
        cheb_conv_backward(grad_pre, t.nodes_[ic].value, basis, opsp->mats[0], k_max, scratch,
                           wants_x ? &gx : nullptr);
      }
      if (wants_x) add_inplace(t.grad_buf(ix), gx);
    };
  }
  return v;
}

Var Tape::masked_abs_error_sum(Var pred, const DenseMatrix& target,
                               const std::vector<std::uint8_t>& mask) {
  const DenseMatrix& vp = value(pred);
  if (!vp.same_shape(target) || vp.cols() != 1) {
    throw Error("tape masked_abs_error_sum: prediction " + shape_string(vp) + " vs target " +
                shape_string(target));
  }
  if (mask.size() != vp.rows()) throw Error("tape masked_abs_error_sum: mask length mismatch");
  DenseMatrix out(1, 1);
  for (std::size_t r = 0; r < vp.rows(); ++r) {
    if (mask[r]) out(0, 0) += std::abs(vp(r, 0) - target(r, 0));
  }
  Var v = push(std::move(out), needs_grad(pred));
  if (nodes_[v.id].requires_grad) {
    nodes_[v.id].backprop = [self = v.id, ip = pred.id, target, mask](Tape& t) {
      if (!t.nodes_[ip].requires_grad) return;
      const double g = t.nodes_[self].grad(0, 0);
      const DenseMatrix& vp = t.nodes_[ip].value;
      DenseMatrix& gp = t.grad_buf(ip);
      for (std::size_t r = 0; r < vp.rows(); ++r) {
        if (!mask[r]) continue;
        const double d = vp(r, 0) - target(r, 0);
        // subgradient of |.|: sign, with sign(0) = 0
        gp(r, 0) += g * (d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0));
      }
    };
  }
  return v;
}

void Tape::backward(Var loss) {
  if (!record_) throw Error("tape backward: tape was created without gradient recording");
  check(loss);
  const Node& ln = nodes_[loss.id];
  if (ln.value.rows() != 1 || ln.value.cols() != 1) {
    throw Error("tape backward: loss must be scalar, got " + shape_string(ln.value));
  }
  for (Node& n : nodes_) n.grad = DenseMatrix();
  if (!ln.requires_grad) return;  // loss does not depend on any parameter
  grad_buf(loss.id)(0, 0) = 1.0;
  for (std::uint32_t i = loss.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.requires_grad || n.grad.empty()) continue;
    if (n.backprop) n.backprop(*this);
  }
}

}  // namespace dcrnn
