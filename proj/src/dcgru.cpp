#include "dcrnn/dcgru.hpp"

namespace dcrnn {

std::size_t conv_term_count(ConvMode mode) {
  switch (mode) {
    case ConvMode::bidirectional: return 2;
    case ConvMode::forward_only: return 1;
    case ConvMode::identity: return 2;  // parameter count matches bidirectional
    case ConvMode::chebnet: return 1;
  }
  return 2;
}

std::string to_string(ConvMode mode) {
  switch (mode) {
    case ConvMode::bidirectional: return "bidirectional";
    case ConvMode::forward_only: return "forward_only";
    case ConvMode::identity: return "identity";
    case ConvMode::chebnet: return "chebnet";
  }
  return "bidirectional";
}

ConvMode conv_mode_from_string(const std::string& s) {
  if (s == "bidirectional") return ConvMode::bidirectional;
  if (s == "forward_only") return ConvMode::forward_only;
  if (s == "identity") return ConvMode::identity;
  if (s == "chebnet") return ConvMode::chebnet;
  throw Error("unknown conv_mode '" + s + "'");
}

ConvOperators make_conv_operators(ConvMode mode, const WeightedDigraph& g, double lambda_max) {
  switch (mode) {
    case ConvMode::bidirectional:
      return ConvOperators::make({out_transition(g), in_transition(g)});
    case ConvMode::forward_only:
      return ConvOperators::make({out_transition(g)});
    case ConvMode::identity:
      return ConvOperators::make({SparseMatrix::identity(g.n()), SparseMatrix::identity(g.n())});
    case ConvMode::chebnet: {
      const WeightedDigraph sym = symmetrize(g);
      const SparseMatrix lap = normalized_laplacian(sym);
      const double lmax = lambda_max > 0.0 ? lambda_max : estimate_lambda_max(lap);
      SparseMatrix l_tilde = rescaled_laplacian(lap, lmax);
      if (!is_symmetric(l_tilde)) throw Error("make_conv_operators: rescaled Laplacian asymmetric");
      return ConvOperators::make({std::move(l_tilde)});
    }
  }
  throw Error("make_conv_operators: bad mode");
}

DCGRULayer DCGRULayer::make(const std::string& name_prefix, std::size_t input_dim,
                            std::size_t hidden_dim, std::size_t k_max, ConvMode mode,
                            std::uint64_t seed) {
  const std::size_t rows = conv_term_count(mode) * k_max * (input_dim + hidden_dim);
  return DCGRULayer{input_dim,
                    hidden_dim,
                    k_max,
                    mode,
                    init_params(name_prefix + ".theta_r", rows, hidden_dim, seed * 3 + 1),
                    init_params(name_prefix + ".theta_u", rows, hidden_dim, seed * 3 + 2),
                    init_params(name_prefix + ".theta_c", rows, hidden_dim, seed * 3 + 3),
                    init_params(name_prefix + ".bias_r", 1, hidden_dim, 0, InitScheme::zeros),
                    init_params(name_prefix + ".bias_u", 1, hidden_dim, 0, InitScheme::zeros),
                    init_params(name_prefix + ".bias_c", 1, hidden_dim, 0, InitScheme::zeros)};
}

std::vector<ParamTensor*> DCGRULayer::params() {
  return {&theta_r, &theta_u, &theta_c, &bias_r, &bias_u, &bias_c};
}

DCGRULayerVars bind_layer(Tape& t, DCGRULayer& layer) {
  return DCGRULayerVars{t.param(layer.theta_r), t.param(layer.theta_u), t.param(layer.theta_c),
                        t.param(layer.bias_r), t.param(layer.bias_u), t.param(layer.bias_c)};
}

Var conv_dispatch(Tape& t, ConvMode mode, Var x, Var coeffs, const ConvOperators& ops,
                  std::size_t k_max) {
  if (mode == ConvMode::chebnet) {
    return t.cheb_conv(x, coeffs, ops, k_max, Activation::identity);
  }
  return t.graph_conv(x, coeffs, ops, k_max, Activation::identity);
}

Var dcgru_cell(Tape& t, Var x_t, Var h_prev, DCGRULayer& layer, const DCGRULayerVars& vars,
               const ConvOperators& ops) {
  if (t.value(x_t).cols() != layer.input_dim) {
    throw Error("dcgru_cell: input has " + std::to_string(t.value(x_t).cols()) +
                " features, layer expects " + std::to_string(layer.input_dim));
  }
  if (t.value(h_prev).cols() != layer.hidden_dim) {
    throw Error("dcgru_cell: state has " + std::to_string(t.value(h_prev).cols()) +
                " features, layer expects " + std::to_string(layer.hidden_dim));
  }
  const Var xh = t.concat_cols(x_t, h_prev);
  const Var r = t.sigmoid(t.add_bias(conv_dispatch(t, layer.mode, xh, vars.theta_r, ops, layer.k_max),
                                     vars.bias_r));
  const Var u = t.sigmoid(t.add_bias(conv_dispatch(t, layer.mode, xh, vars.theta_u, ops, layer.k_max),
                                     vars.bias_u));
  const Var xrh = t.concat_cols(x_t, t.mul(r, h_prev));
  const Var c = t.tanh(t.add_bias(conv_dispatch(t, layer.mode, xrh, vars.theta_c, ops, layer.k_max),
                                  vars.bias_c));
  return t.add(t.mul(u, h_prev), t.mul(t.affine(u, -1.0, 1.0), c));
}

std::pair<Var, std::vector<Var>> stacked_step(Tape& t, Var x_t, const std::vector<Var>& h_prev,
                                              std::vector<DCGRULayer>& layers,
                                              const std::vector<DCGRULayerVars>& vars,
                                              const ConvOperators& ops) {
  if (h_prev.size() != layers.size() || vars.size() != layers.size()) {
    throw Error("stacked_step: state/vars size does not match layer count");
  }
  std::vector<Var> new_state;
  new_state.reserve(layers.size());
  Var input = x_t;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    input = dcgru_cell(t, input, h_prev[l], layers[l], vars[l], ops);
    new_state.push_back(input);
  }
  return {input, std::move(new_state)};
}

DiffusionFilter extract_filter(const DCGRULayer& layer, char gate, std::size_t p, std::size_t q) {
  if (layer.mode == ConvMode::chebnet) {
    throw Error("extract_filter: chebnet layers have no diffusion filter");
  }
  const ParamTensor* theta = nullptr;
  switch (gate) {
    case 'r': theta = &layer.theta_r; break;
    case 'u': theta = &layer.theta_u; break;
    case 'c': theta = &layer.theta_c; break;
    default: throw Error("extract_filter: gate must be one of r, u, c");
  }
  const std::size_t pc = layer.input_dim + layer.hidden_dim;
  if (p >= pc || q >= layer.hidden_dim) throw Error("extract_filter: (p, q) out of range");
  DiffusionFilter f;
  f.k_max = layer.k_max;
  f.theta = DenseMatrix(layer.k_max, 2);
  const std::size_t terms = conv_term_count(layer.mode);
  for (std::size_t dir = 0; dir < terms && dir < 2; ++dir) {
    for (std::size_t k = 0; k < layer.k_max; ++k) {
      f.theta(k, dir) = theta->value((dir * layer.k_max + k) * pc + p, q);
    }
  }
  return f;
}

}  // namespace dcrnn
