#pragma once

#include <string>
#include <utility>
#include <vector>

#include "dcrnn/graph.hpp"
#include "dcrnn/sparse.hpp"

namespace dcrnn {

enum class Activation { identity, relu, sigmoid, tanh };

/// Filter for the bidirectional random-walk convolution: theta is K x 2,
/// column 0 weighting forward-walk powers and column 1 reverse-walk powers.
struct DiffusionFilter {
  DenseMatrix theta;  // k_max x 2
  std::size_t k_max = 0;
};

/// Parameters of a diffusion convolutional layer mapping P input features to
/// Q output features; theta is indexed (q, p, k, direction).
class DConvLayerParams {
 public:
  DConvLayerParams(std::size_t q, std::size_t p, std::size_t k_max,
                   Activation act = Activation::identity)
      : q_(q), p_(p), k_(k_max), act_(act), theta_(q * p * k_max * 2, 0.0) {}

  std::size_t out_features() const { return q_; }
  std::size_t in_features() const { return p_; }
  std::size_t k_max() const { return k_; }
  Activation activation() const { return act_; }

  double& at(std::size_t q, std::size_t p, std::size_t k, std::size_t dir) {
    return theta_[((q * p_ + p) * k_ + k) * 2 + dir];
  }
  double at(std::size_t q, std::size_t p, std::size_t k, std::size_t dir) const {
    return theta_[((q * p_ + p) * k_ + k) * 2 + dir];
  }

  /// Stacked coefficient matrix used by the evaluation kernel: block row
  /// (dir * k_max + k) holds the P x Q map for walk power k of direction dir.
  DenseMatrix stacked() const;

 private:
  std::size_t q_, p_, k_;
  Activation act_;
  std::vector<double> theta_;
};

/// Chebyshev-basis spectral filter of order k_max over the rescaled Laplacian.
struct ChebFilter {
  std::vector<double> theta;  // k_max coefficients
  std::size_t k_max = 0;
};

/// Bidirectional diffusion convolution of a single signal column:
/// sum_k (theta[k][0] P_out^k + theta[k][1] P_in^k) x. Powers are evaluated
/// recursively (sparse products only, never dense matrix powers).
DenseMatrix diffusion_conv(const DenseMatrix& x_col, const DiffusionFilter& f,
                           const SparseMatrix& p_out, const SparseMatrix& p_in);

/// Diffusion convolutional layer: H[:,q] = act(sum_p x[:,p] * filter(q,p)).
/// Walk powers are computed once per input column and reused for all outputs.
DenseMatrix dconv_layer(const DenseMatrix& x, const DConvLayerParams& params,
                        const SparseMatrix& p_out, const SparseMatrix& p_in);

/// ChebNet convolution sum_k theta[k] T_k(L~) x with the standard recurrence
/// T_0 = I, T_1 = L~, T_k = 2 L~ T_{k-1} - T_{k-2}. Throws if l_tilde is not
/// symmetric.
DenseMatrix chebnet_conv(const DenseMatrix& x_col, const ChebFilter& f,
                         const SparseMatrix& l_tilde);

/// Per-node effective weights of a diffusion filter centered at node i:
/// sum_k (theta[k][0] P_out^k + theta[k][1] P_in^k) e_i, as (node_id, weight).
std::vector<std::pair<std::string, double>> filter_node_weights(const WeightedDigraph& g,
                                                                const DiffusionFilter& f,
                                                                std::size_t center);

// --- low-level kernels shared with the autodiff tape ---

double apply_activation(Activation act, double x);
/// d(act)/dx expressed through the activation output y.
double activation_grad_from_output(Activation act, double y);

/// Forward pass over stacked coefficients. `coeffs` has mats.size() * k_max
/// block rows of size x.cols() each; output is pre-activation row-major N x Q.
/// `powers_out`, when non-null, receives the cached walk powers per matrix.
DenseMatrix graph_conv_forward(const DenseMatrix& x, const DenseMatrix& coeffs,
                               const std::vector<const SparseMatrix*>& mats, std::size_t k_max,
                               Activation act,
                               std::vector<std::vector<DenseMatrix>>* powers_out = nullptr);

/// Accumulates coefficient and input gradients for graph_conv_forward.
/// `grad_pre` is dLoss/dS with S the pre-activation output; `mats_t` are the
/// transposes of `mats`. `grad_x` may be null when the input needs no grad.
void graph_conv_backward(const DenseMatrix& grad_pre, const DenseMatrix& coeffs,
                         const std::vector<std::vector<DenseMatrix>>& powers,
                         const std::vector<const SparseMatrix*>& mats_t, std::size_t k_max,
                         DenseMatrix& grad_coeffs, DenseMatrix* grad_x);

/// Chebyshev forward with cached basis terms Z_k = T_k(L~) x.
DenseMatrix cheb_conv_forward(const DenseMatrix& x, const DenseMatrix& coeffs,
                              const SparseMatrix& l_tilde, std::size_t k_max, Activation act,
                              std::vector<DenseMatrix>* basis_out = nullptr);

void cheb_conv_backward(const DenseMatrix& grad_pre, const DenseMatrix& coeffs,
                        const std::vector<DenseMatrix>& basis, const SparseMatrix& l_tilde,
                        std::size_t k_max, DenseMatrix& grad_coeffs, DenseMatrix* grad_x);

}  // namespace dcrnn
