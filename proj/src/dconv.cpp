#include "dcrnn/dconv.hpp"

#include <cmath>

namespace dcrnn {

double apply_activation(Activation act, double x) {
  switch (act) {
    case Activation::identity: return x;
    case Activation::relu: return x > 0.0 ? x : 0.0;
    case Activation::sigmoid: return 1.0 / (1.0 + std::exp(-x));
    case Activation::tanh: return std::tanh(x);
  }
  return x;
}

double activation_grad_from_output(Activation act, double y) {
  switch (act) {
    case Activation::identity: return 1.0;
    case Activation::relu: return y > 0.0 ? 1.0 : 0.0;
    case Activation::sigmoid: return y * (1.0 - y);
    case Activation::tanh: return 1.0 - y * y;
  }
  return 1.0;
}

DenseMatrix DConvLayerParams::stacked() const {
  DenseMatrix s(2 * k_ * p_, q_);
  for (std::size_t dir = 0; dir < 2; ++dir) {
    for (std::size_t k = 0; k < k_; ++k) {
      for (std::size_t p = 0; p < p_; ++p) {
        for (std::size_t q = 0; q < q_; ++q) {
          s((dir * k_ + k) * p_ + p, q) = at(q, p, k, dir);
        }
      }
    }
  }
  return s;
}

namespace {

void check_square_match(const SparseMatrix& m, std::size_t n, const char* what) {
  if (m.n_rows() != m.n_cols() || m.n_rows() != n) {
    throw Error(std::string(what) + ": operator is " + std::to_string(m.n_rows()) + "x" +
                std::to_string(m.n_cols()) + ", signal has " + std::to_string(n) + " rows");
  }
}

}  // namespace

DenseMatrix graph_conv_forward(const DenseMatrix& x, const DenseMatrix& coeffs,
                               const std::vector<const SparseMatrix*>& mats, std::size_t k_max,
                               Activation act,
                               std::vector<std::vector<DenseMatrix>>* powers_out) {
  const std::size_t p = x.cols();
  if (coeffs.rows() != mats.size() * k_max * p) {
    throw Error("graph_conv: coefficient matrix has " + std::to_string(coeffs.rows()) +
                " rows, expected " + std::to_string(mats.size() * k_max * p));
  }
  const std::size_t q = coeffs.cols();
  DenseMatrix s(x.rows(), q);
  if (powers_out) powers_out->clear();
  for (std::size_t m = 0; m < mats.size(); ++m) {
    check_square_match(*mats[m], x.rows(), "graph_conv");
    std::vector<DenseMatrix> powers = diffusion_powers(*mats[m], x, k_max);
    for (std::size_t k = 0; k < k_max; ++k) {
      const DenseMatrix& t = powers[k];
      const std::size_t block = (m * k_max + k) * p;
      // s += t * coeffs[block : block+p, :]
      for (std::size_t r = 0; r < t.rows(); ++r) {
        const double* tr = t.row(r);
        double* sr = s.row(r);
        for (std::size_t pp = 0; pp < p; ++pp) {
          const double tv = tr[pp];
          if (tv == 0.0) continue;
          const double* cr = coeffs.row(block + pp);
          for (std::size_t qq = 0; qq < q; ++qq) sr[qq] += tv * cr[qq];
        }
      }
    }
    if (powers_out) powers_out->push_back(std::move(powers));
  }
  if (act != Activation::identity) {
    for (std::size_t i = 0; i < s.size(); ++i) s.data()[i] = apply_activation(act, s.data()[i]);
  }
  return s;
}

void graph_conv_backward(const DenseMatrix& grad_pre, const DenseMatrix& coeffs,
                         const std::vector<std::vector<DenseMatrix>>& powers,
                         const std::vector<const SparseMatrix*>& mats_t, std::size_t k_max,
                         DenseMatrix& grad_coeffs, DenseMatrix* grad_x) {
  const std::size_t q = grad_pre.cols();
  const std::size_t p = powers.at(0).at(0).cols();
  if (!grad_coeffs.same_shape(coeffs)) grad_coeffs = DenseMatrix(coeffs.rows(), coeffs.cols());
  for (std::size_t m = 0; m < powers.size(); ++m) {
    // grad for each coefficient block: T_k^T * grad_pre
    for (std::size_t k = 0; k < k_max; ++k) {
      const DenseMatrix& t = powers[m][k];
      const std::size_t block = (m * k_max + k) * p;
      for (std::size_t r = 0; r < t.rows(); ++r) {
        const double* tr = t.row(r);
        const double* gr = grad_pre.row(r);
        for (std::size_t pp = 0; pp < p; ++pp) {
          const double tv = tr[pp];
          if (tv == 0.0) continue;
          double* cg = grad_coeffs.row(block + pp);
          for (std::size_t qq = 0; qq < q; ++qq) cg[qq] += tv * gr[qq];
        }
      }
    }
    if (grad_x) {
      // Horner on the transposed operator: R = V_{K-1}; R = M^T R + V_k.
      // V_k = grad_pre * block_k^T.
      auto block_vk = [&](std::size_t k) {
        DenseMatrix v(grad_pre.rows(), p);
        const std::size_t block = (m * k_max + k) * p;
        for (std::size_t r = 0; r < grad_pre.rows(); ++r) {
          const double* gr = grad_pre.row(r);
          double* vr = v.row(r);
          for (std::size_t pp = 0; pp < p; ++pp) {
            const double* cr = coeffs.row(block + pp);
            double s = 0.0;
            for (std::size_t qq = 0; qq < q; ++qq) s += gr[qq] * cr[qq];
            vr[pp] = s;
          }
        }
        return v;
      };
      DenseMatrix r = block_vk(k_max - 1);
      for (std::size_t k = k_max - 1; k-- > 0;) {
        r = spmm(*mats_t[m], r);
        add_inplace(r, block_vk(k));
      }
      add_inplace(*grad_x, r);
    }
  }
}

DenseMatrix cheb_conv_forward(const DenseMatrix& x, const DenseMatrix& coeffs,
                              const SparseMatrix& l_tilde, std::size_t k_max, Activation act,
                              std::vector<DenseMatrix>* basis_out) {
  check_square_match(l_tilde, x.rows(), "cheb_conv");
  const std::size_t p = x.cols();
  if (coeffs.rows() != k_max * p) {
    throw Error("cheb_conv: coefficient matrix has " + std::to_string(coeffs.rows()) +
                " rows, expected " + std::to_string(k_max * p));
  }
  const std::size_t q = coeffs.cols();
  std::vector<DenseMatrix> basis;
  basis.reserve(k_max);
  basis.push_back(x);
  if (k_max >= 2) basis.push_back(spmm(l_tilde, x));
  for (std::size_t k = 2; k < k_max; ++k) {
    DenseMatrix z = spmm(l_tilde, basis[k - 1]);
    for (std::size_t i = 0; i < z.size(); ++i) {
      z.data()[i] = 2.0 * z.data()[i] - basis[k - 2].data()[i];
    }
    basis.push_back(std::move(z));
  }
  DenseMatrix s(x.rows(), q);
  for (std::size_t k = 0; k < k_max; ++k) {
    const DenseMatrix& z = basis[k];
    for (std::size_t r = 0; r < z.rows(); ++r) {
      const double* zr = z.row(r);
      double* sr = s.row(r);
      for (std::size_t pp = 0; pp < p; ++pp) {
        const double zv = zr[pp];
        if (zv == 0.0) continue;
        const double* cr = coeffs.row(k * p + pp);
        for (std::size_t qq = 0; qq < q; ++qq) sr[qq] += zv * cr[qq];
      }
    }
  }
  if (basis_out) *basis_out = std::move(basis);
  if (act != Activation::identity) {
    for (std::size_t i = 0; i < s.size(); ++i) s.data()[i] = apply_activation(act, s.data()[i]);
  }
  return s;
}

void cheb_conv_backward(const DenseMatrix& grad_pre, const DenseMatrix& coeffs,
                        const std::vector<DenseMatrix>& basis, const SparseMatrix& l_tilde,
                        std::size_t k_max, DenseMatrix& grad_coeffs, DenseMatrix* grad_x) {
  const std::size_t q = grad_pre.cols();
  const std::size_t p = basis.at(0).cols();
  if (!grad_coeffs.same_shape(coeffs)) grad_coeffs = DenseMatrix(coeffs.rows(), coeffs.cols());
  std::vector<DenseMatrix> z_hat(k_max);  // adjoints of the basis terms
  for (std::size_t k = 0; k < k_max; ++k) {
    const DenseMatrix& z = basis[k];
    for (std::size_t r = 0; r < z.rows(); ++r) {
      const double* zr = z.row(r);
      const double* gr = grad_pre.row(r);
      for (std::size_t pp = 0; pp < p; ++pp) {
        const double zv = zr[pp];
        if (zv == 0.0) continue;
        double* cg = grad_coeffs.row(k * p + pp);
        for (std::size_t qq = 0; qq < q; ++qq) cg[qq] += zv * gr[qq];
      }
    }
    if (grad_x) {
      DenseMatrix v(grad_pre.rows(), p);
      for (std::size_t r = 0; r < grad_pre.rows(); ++r) {
        const double* gr = grad_pre.row(r);
        double* vr = v.row(r);
        for (std::size_t pp = 0; pp < p; ++pp) {
          const double* cr = coeffs.row(k * p + pp);
          double s = 0.0;
          for (std::size_t qq = 0; qq < q; ++qq) s += gr[qq] * cr[qq];
          vr[pp] = s;
        }
      }
      z_hat[k] = std::move(v);
    }
  }
  if (!grad_x) return;
  // Reverse the recurrence Z_k = 2 L Z_{k-1} - Z_{k-2} (L symmetric).
  for (std::size_t k = k_max; k-- > 2;) {
    DenseMatrix back = spmm(l_tilde, z_hat[k]);
    axpy_inplace(z_hat[k - 1], 2.0, back);
    axpy_inplace(z_hat[k - 2], -1.0, z_hat[k]);
  }
  if (k_max >= 2) {
    DenseMatrix back = spmm(l_tilde, z_hat[1]);
    add_inplace(z_hat[0], back);
  }
  add_inplace(*grad_x, z_hat[0]);
}

DenseMatrix diffusion_conv(const DenseMatrix& x_col, const DiffusionFilter& f,
                           const SparseMatrix& p_out, const SparseMatrix& p_in) {
  if (x_col.cols() != 1) throw Error("diffusion_conv: expected a single column signal");
  if (f.theta.rows() != f.k_max || f.theta.cols() != 2) {
    throw Error("diffusion_conv: theta must be k_max x 2");
  }
  DenseMatrix coeffs(2 * f.k_max, 1);
  for (std::size_t k = 0; k < f.k_max; ++k) {
    coeffs(k, 0) = f.theta(k, 0);
    coeffs(f.k_max + k, 0) = f.theta(k, 1);
  }
  return graph_conv_forward(x_col, coeffs, {&p_out, &p_in}, f.k_max, Activation::identity);
}

DenseMatrix dconv_layer(const DenseMatrix& x, const DConvLayerParams& params,
                        const SparseMatrix& p_out, const SparseMatrix& p_in) {
  if (x.cols() != params.in_features()) {
    throw Error("dconv_layer: input has " + std::to_string(x.cols()) + " features, expected " +
                std::to_string(params.in_features()));
  }
  return graph_conv_forward(x, params.stacked(), {&p_out, &p_in}, params.k_max(),
                            params.activation());
}

DenseMatrix chebnet_conv(const DenseMatrix& x_col, const ChebFilter& f,
                         const SparseMatrix& l_tilde) {
  if (x_col.cols() != 1) throw Error("chebnet_conv: expected a single column signal");
  if (f.theta.size() != f.k_max) throw Error("chebnet_conv: theta length must equal k_max");
  if (!is_symmetric(l_tilde)) throw Error("chebnet_conv: rescaled Laplacian is not symmetric");
  DenseMatrix coeffs(f.k_max, 1);
  for (std::size_t k = 0; k < f.k_max; ++k) coeffs(k, 0) = f.theta[k];
  return cheb_conv_forward(x_col, coeffs, l_tilde, f.k_max, Activation::identity);
}

std::vector<std::pair<std::string, double>> filter_node_weights(const WeightedDigraph& g,
                                                                const DiffusionFilter& f,
                                                                std::size_t center) {
  if (center >= g.n()) throw Error("filter_node_weights: center index out of range");
  DenseMatrix e(g.n(), 1);
  e(center, 0) = 1.0;
  const SparseMatrix p_out = out_transition(g);
  const SparseMatrix p_in = in_transition(g);
  const DenseMatrix w = diffusion_conv(e, f, p_out, p_in);
  std::vector<std::pair<std::string, double>> out;
  out.reserve(g.n());
  for (std::size_t i = 0; i < g.n(); ++i) out.emplace_back(g.node_ids()[i], w(i, 0));
  return out;
}

}  // namespace dcrnn
