#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dcrnn/autodiff.hpp"
#include "dcrnn/graph.hpp"
#include "dcrnn/optim.hpp"

namespace dcrnn {

/// Which operators the gate convolutions run over.
enum class ConvMode { bidirectional, forward_only, identity, chebnet };

std::size_t conv_term_count(ConvMode mode);
std::string to_string(ConvMode mode);
ConvMode conv_mode_from_string(const std::string& s);

/// Builds the operator bundle for a mode: forward/reverse transition matrices,
/// identity pairs, or the rescaled Laplacian of the symmetrized graph.
/// lambda_max <= 0 requests a power-iteration estimate instead of the
/// default assumption of 2.
ConvOperators make_conv_operators(ConvMode mode, const WeightedDigraph& g, double lambda_max = 2.0);

/// One DCGRU layer: reset/update/candidate gate filters plus biases, each
/// gate a graph convolution mapping (P + Q) features to Q with identity
/// activation inside the convolution.
struct DCGRULayer {
  std::size_t input_dim = 0;   // P
  std::size_t hidden_dim = 0;  // Q
  std::size_t k_max = 0;       // K
  ConvMode mode = ConvMode::bidirectional;

  ParamTensor theta_r;
  ParamTensor theta_u;
  ParamTensor theta_c;
  ParamTensor bias_r;
  ParamTensor bias_u;
  ParamTensor bias_c;

  static DCGRULayer make(const std::string& name_prefix, std::size_t input_dim,
                         std::size_t hidden_dim, std::size_t k_max, ConvMode mode,
                         std::uint64_t seed);
  std::vector<ParamTensor*> params();
  /// Rows of the stacked gate coefficient matrices.
  std::size_t coeff_rows() const { return conv_term_count(mode) * k_max * (input_dim + hidden_dim); }
};

/// Per-tape handles to one layer's parameters (each parameter recorded once).
struct DCGRULayerVars {
  Var theta_r, theta_u, theta_c;
  Var bias_r, bias_u, bias_c;
};

DCGRULayerVars bind_layer(Tape& t, DCGRULayer& layer);

/// Hidden state of a stack of DCGRU layers, one N x Q matrix per layer.
struct DCGRUState {
  std::vector<DenseMatrix> hidden;
};

/// Convolution by mode over already-concatenated features.
Var conv_dispatch(Tape& t, ConvMode mode, Var x, Var coeffs, const ConvOperators& ops,
                  std::size_t k_max);

/// One DCGRU step:
///   r = sigmoid(conv([x, h]) + b_r)
///   u = sigmoid(conv([x, h]) + b_u)
///   c = tanh(conv([x, r.h]) + b_c)
///   h' = u.h + (1 - u).c
Var dcgru_cell(Tape& t, Var x_t, Var h_prev, DCGRULayer& layer, const DCGRULayerVars& vars,
               const ConvOperators& ops);

/// Feeds each layer's output to the next; returns (top output, new state).
std::pair<Var, std::vector<Var>> stacked_step(Tape& t, Var x_t, const std::vector<Var>& h_prev,
                                              std::vector<DCGRULayer>& layers,
                                              const std::vector<DCGRULayerVars>& vars,
                                              const ConvOperators& ops);

/// Extracts the K x 2 filter of one (gate, input p, output q) slot of a layer.
/// For forward_only the reverse column is zero. Throws for chebnet layers.
DiffusionFilter extract_filter(const DCGRULayer& layer, char gate, std::size_t p, std::size_t q);

}  // namespace dcrnn
