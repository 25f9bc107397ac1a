#include "dcrnn/seq2seq.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>
#include <limits>

#include "dcrnn/optim.hpp"

namespace dcrnn {

namespace {

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

std::string to_string(Curriculum c) {
  switch (c) {
    case Curriculum::always_truth: return "always_truth";
    case Curriculum::always_model: return "always_model";
    case Curriculum::scheduled: return "scheduled";
  }
  return "scheduled";
}

Curriculum curriculum_from_string(const std::string& s) {
  if (s == "always_truth") return Curriculum::always_truth;
  if (s == "always_model") return Curriculum::always_model;
  if (s == "scheduled") return Curriculum::scheduled;
  throw Error("unknown curriculum '" + s + "'");
}

std::string to_string(TemporalMode m) {
  switch (m) {
    case TemporalMode::dcrnn: return "dcrnn";
    case TemporalMode::dcrnn_seq: return "dcrnn_seq";
    case TemporalMode::dcnn: return "dcnn";
  }
  return "dcrnn";
}

TemporalMode temporal_mode_from_string(const std::string& s) {
  if (s == "dcrnn") return TemporalMode::dcrnn;
  if (s == "dcrnn_seq") return TemporalMode::dcrnn_seq;
  if (s == "dcnn") return TemporalMode::dcnn;
  throw Error("unknown temporal_mode '" + s + "'");
}

double sampling_probability(std::uint64_t iteration, double tau) {
  if (!(tau > 0.0)) throw Error("sampling_probability: tau must be > 0");
  return tau / (tau + std::exp(static_cast<double>(iteration) / tau));
}

Seq2SeqModel::Seq2SeqModel(const ModelConfig& cfg, const WeightedDigraph& graph,
                           std::uint64_t seed)
    : cfg_(cfg),
      n_(graph.n()),
      ops_(make_conv_operators(cfg.conv_mode, graph, cfg.lambda_max)),
      proj_w_(init_params("proj.w", cfg.units, 1, mix_seed(seed, 901))),
      proj_b_(init_params("proj.b", 1, 1, 0, InitScheme::zeros)) {
  if (cfg_.history < 1 || cfg_.horizon < 1) throw Error("model: history and horizon must be >= 1");
  if (cfg_.layers < 1) throw Error("model: need at least one layer");
  if (cfg_.temporal_mode == TemporalMode::dcnn) {
    // Stacked convolutional layers over the concatenated history.
    std::size_t in_dim = cfg_.history * cfg_.input_dim;
    for (std::size_t l = 0; l < cfg_.layers; ++l) {
      const std::size_t rows = conv_term_count(cfg_.conv_mode) * cfg_.k_max * in_dim;
      dcnn_.push_back(DcnnLayer{
          init_params("dcnn." + std::to_string(l) + ".coeffs", rows, cfg_.units,
                      mix_seed(seed, 100 + l)),
          init_params("dcnn." + std::to_string(l) + ".bias", 1, cfg_.units, 0, InitScheme::zeros),
          Activation::relu, in_dim, cfg_.units});
      in_dim = cfg_.units;
    }
    const std::size_t rows = conv_term_count(cfg_.conv_mode) * cfg_.k_max * in_dim;
    dcnn_.push_back(DcnnLayer{
        init_params("dcnn.out.coeffs", rows, 1, mix_seed(seed, 199)),
        init_params("dcnn.out.bias", 1, 1, 0, InitScheme::zeros), Activation::identity, in_dim,
        1});
  } else {
    for (std::size_t l = 0; l < cfg_.layers; ++l) {
      const std::size_t in_dim = l == 0 ? cfg_.input_dim : cfg_.units;
      encoder_.push_back(DCGRULayer::make("encoder." + std::to_string(l), in_dim, cfg_.units,
                                          cfg_.k_max, cfg_.conv_mode, mix_seed(seed, 200 + l)));
      decoder_.push_back(DCGRULayer::make("decoder." + std::to_string(l), in_dim, cfg_.units,
                                          cfg_.k_max, cfg_.conv_mode, mix_seed(seed, 300 + l)));
    }
  }
}

std::vector<ParamTensor*> Seq2SeqModel::params() {
  std::vector<ParamTensor*> out;
  for (DCGRULayer& l : encoder_) {
    for (ParamTensor* p : l.params()) out.push_back(p);
  }
  for (DCGRULayer& l : decoder_) {
    for (ParamTensor* p : l.params()) out.push_back(p);
  }
  for (DcnnLayer& l : dcnn_) {
    out.push_back(&l.coeffs);
    out.push_back(&l.bias);
  }
  if (cfg_.temporal_mode != TemporalMode::dcnn) {
    out.push_back(&proj_w_);
    out.push_back(&proj_b_);
  }
  return out;
}

std::vector<const ParamTensor*> Seq2SeqModel::params() const {
  auto mutable_params = const_cast<Seq2SeqModel*>(this)->params();
  return {mutable_params.begin(), mutable_params.end()};
}

Seq2SeqModel::Bound Seq2SeqModel::bind(Tape& t) {
  Bound b;
  for (DCGRULayer& l : encoder_) b.encoder.push_back(bind_layer(t, l));
  for (DCGRULayer& l : decoder_) b.decoder.push_back(bind_layer(t, l));
  for (DcnnLayer& l : dcnn_) b.dcnn.emplace_back(t.param(l.coeffs), t.param(l.bias));
  if (cfg_.temporal_mode != TemporalMode::dcnn) {
    b.proj_w = t.param(proj_w_);
    b.proj_b = t.param(proj_b_);
  }
  return b;
}

std::vector<Var> Seq2SeqModel::encode_on_tape(Tape& t, const Bound& b,
                                              const std::vector<DenseMatrix>& inputs) {
  if (inputs.size() != cfg_.history) {
    throw Error("encode: got " + std::to_string(inputs.size()) + " frames, expected " +
                std::to_string(cfg_.history));
  }
  std::vector<Var> state;
  for (std::size_t l = 0; l < encoder_.size(); ++l) {
    state.push_back(t.constant(DenseMatrix(n_, cfg_.units)));
  }
  for (const DenseMatrix& frame : inputs) {
    auto [top, next] = stacked_step(t, t.constant(frame), state, encoder_, b.encoder, ops_);
    (void)top;
    state = std::move(next);
  }
  return state;
}

Var Seq2SeqModel::feedback_input(Tape& t, Var prediction, const ForecastSample* sample,
                                 std::size_t step) {
  if (cfg_.input_dim == 1) return prediction;
  if (!sample || sample->target_aux.size() <= step) {
    throw Error("decode: auxiliary input channels require target-step features");
  }
  return t.concat_cols(prediction, t.constant(sample->target_aux[step]));
}

std::vector<Var> Seq2SeqModel::decode_on_tape(Tape& t, const Bound& b, std::vector<Var> state,
                                              const ForecastSample* sample, double epsilon,
                                              std::mt19937_64& coin_rng) {
  if (epsilon > 0.0 && (!sample || sample->targets.size() < cfg_.horizon)) {
    throw Error("decode: epsilon > 0 requires ground-truth targets");
  }
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::vector<Var> predictions;
  predictions.reserve(cfg_.horizon);
  Var input = t.constant(DenseMatrix(n_, cfg_.input_dim));  // GO frame
  for (std::size_t h = 0; h < cfg_.horizon; ++h) {
    auto [top, next] = stacked_step(t, input, state, decoder_, b.decoder, ops_);
    state = std::move(next);
    const Var pred = t.add_bias(t.matmul(top, b.proj_w), b.proj_b);
    predictions.push_back(pred);
    if (h + 1 == cfg_.horizon) break;
    const bool use_truth = epsilon > 0.0 && coin(coin_rng) < epsilon;
    if (use_truth) {
      input = feedback_input(t, t.constant(sample->targets[h]), sample, h);
    } else {
      input = feedback_input(t, pred, sample, h);
    }
  }
  return predictions;
}

Var Seq2SeqModel::dcnn_step_on_tape(Tape& t, const Bound& b,
                                    const std::vector<DenseMatrix>& history) {
  if (history.size() != cfg_.history) {
    throw Error("dcnn: got " + std::to_string(history.size()) + " frames, expected " +
                std::to_string(cfg_.history));
  }
  Var x = t.constant(history[0]);
  for (std::size_t i = 1; i < history.size(); ++i) {
    x = t.concat_cols(x, t.constant(history[i]));
  }
  for (std::size_t l = 0; l < dcnn_.size(); ++l) {
    const DcnnLayer& layer = dcnn_[l];
    Var s = t.graph_conv(x, b.dcnn[l].first, ops_, cfg_.k_max, Activation::identity);
    s = t.add_bias(s, b.dcnn[l].second);
    x = layer.act == Activation::relu ? t.relu(s) : s;
  }
  return x;
}

std::vector<Var> Seq2SeqModel::dcnn_rollout_on_tape(Tape& t, const Bound& b,
                                                    const ForecastSample& sample) {
  std::deque<Var> history;
  for (const DenseMatrix& f : sample.inputs) history.push_back(t.constant(f));
  std::vector<Var> predictions;
  for (std::size_t h = 0; h < cfg_.horizon; ++h) {
    // stitch current history into one frame list
    Var x = history[0];
    for (std::size_t i = 1; i < history.size(); ++i) x = t.concat_cols(x, history[i]);
    for (std::size_t l = 0; l < dcnn_.size(); ++l) {
      Var s = t.graph_conv(x, b.dcnn[l].first, ops_, cfg_.k_max, Activation::identity);
      s = t.add_bias(s, b.dcnn[l].second);
      x = dcnn_[l].act == Activation::relu ? t.relu(s) : s;
    }
    predictions.push_back(x);
    history.pop_front();
    history.push_back(feedback_input(t, x, &sample, h));
  }
  return predictions;
}

DCGRUState Seq2SeqModel::encode(const std::vector<DenseMatrix>& inputs) {
  Tape t(false);
  Bound b = bind(t);
  std::vector<Var> state = encode_on_tape(t, b, inputs);
  DCGRUState s;
  for (Var v : state) s.hidden.push_back(t.value(v));
  return s;
}

std::vector<DenseMatrix> Seq2SeqModel::decode(const DCGRUState& state,
                                              const ForecastSample* sample, double epsilon,
                                              std::mt19937_64& coin_rng) {
  Tape t(false);
  Bound b = bind(t);
  std::vector<Var> state_vars;
  for (const DenseMatrix& h : state.hidden) state_vars.push_back(t.constant(h));
  std::vector<Var> preds = decode_on_tape(t, b, std::move(state_vars), sample, epsilon, coin_rng);
  std::vector<DenseMatrix> out;
  out.reserve(preds.size());
  for (Var v : preds) out.push_back(t.value(v));
  return out;
}

std::vector<DenseMatrix> Seq2SeqModel::forecast(const ForecastSample& sample) {
  Tape t(false);
  Bound b = bind(t);
  std::vector<Var> preds;
  if (cfg_.temporal_mode == TemporalMode::dcnn) {
    preds = dcnn_rollout_on_tape(t, b, sample);
  } else {
    std::mt19937_64 unused_rng(0);
    std::vector<Var> state = encode_on_tape(t, b, sample.inputs);
    preds = decode_on_tape(t, b, std::move(state), &sample, 0.0, unused_rng);
  }
  std::vector<DenseMatrix> out;
  out.reserve(preds.size());
  for (Var v : preds) out.push_back(t.value(v));
  return out;
}

std::vector<ForecastSample> subsample_windows(std::vector<ForecastSample> samples,
                                              std::size_t cap) {
  if (cap == 0 || samples.size() <= cap) return samples;
  std::vector<ForecastSample> out;
  out.reserve(cap);
  for (std::size_t i = 0; i < cap; ++i) {
    out.push_back(std::move(samples[i * samples.size() / cap]));
  }
  return out;
}

namespace {

Curriculum effective_curriculum(const ModelConfig& cfg) {
  if (cfg.temporal_mode == TemporalMode::dcrnn_seq) return Curriculum::always_truth;
  return cfg.curriculum;
}

struct BatchLoss {
  double value = 0.0;
  std::size_t count = 0;
};

/// Records one batch on the tape and returns the normalized loss node.
BatchLoss batch_loss(Tape& t, Seq2SeqModel& model, Seq2SeqModel::Bound& bound,
                     const std::vector<ForecastSample>& samples,
                     const std::vector<std::size_t>& order, std::size_t begin, std::size_t end,
                     double epsilon, std::mt19937_64& coin_rng, Var* loss_out) {
  std::vector<Var> sums;
  std::size_t count = 0;
  const bool dcnn = model.config().temporal_mode == TemporalMode::dcnn;
  for (std::size_t i = begin; i < end; ++i) {
    const ForecastSample& sample = samples[order[i]];
    if (dcnn) {
      Var pred = model.dcnn_step_on_tape(t, bound, sample.inputs);
      sums.push_back(t.masked_abs_error_sum(pred, sample.targets[0], sample.target_mask[0]));
      count += mask_count(sample.target_mask[0]);
    } else {
      std::vector<Var> state = model.encode_on_tape(t, bound, sample.inputs);
      std::vector<Var> preds =
          model.decode_on_tape(t, bound, std::move(state), &sample, epsilon, coin_rng);
      for (std::size_t h = 0; h < preds.size(); ++h) {
        sums.push_back(t.masked_abs_error_sum(preds[h], sample.targets[h], sample.target_mask[h]));
        count += mask_count(sample.target_mask[h]);
      }
    }
  }
  BatchLoss out;
  out.count = count;
  if (count == 0) {
    *loss_out = Var{};
    return out;  // fully masked batch: zero loss, zero gradient
  }
  Var loss = t.affine(t.sum_list(sums), 1.0 / static_cast<double>(count), 0.0);
  out.value = t.value(loss)(0, 0);
  *loss_out = loss;
  return out;
}

}  // namespace

TrainReport train(Seq2SeqModel& model, const std::vector<ForecastSample>& train_samples,
                  const std::vector<ForecastSample>& val_samples, const Hyperparams& hp) {
  const auto t_start = std::chrono::steady_clock::now();
  std::vector<ForecastSample> train_s = subsample_windows(train_samples, hp.max_train_windows);
  std::vector<ForecastSample> val_s = subsample_windows(val_samples, hp.max_val_windows);
  if (train_s.empty()) throw Error("train: no training samples");
  if (hp.batch < 1) throw Error("train: batch size must be >= 1");

  const Curriculum curriculum = effective_curriculum(model.config());
  std::vector<ParamTensor*> params = model.params();
  SamplingSchedule schedule{hp.tau, 0};
  std::mt19937_64 coin_rng(mix_seed(hp.seed, 0xc01));

  TrainReport report;
  double best_val = std::numeric_limits<double>::infinity();
  std::vector<ParamTensor> best_snapshot;
  std::size_t epochs_since_best = 0;

  std::vector<std::size_t> order(train_s.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (std::size_t epoch = 0; epoch < hp.epochs; ++epoch) {
    const double lr = lr_schedule(epoch, hp.base_lr, hp.lr_start_epoch, hp.lr_period, hp.lr_factor);
    std::mt19937_64 shuffle_rng(mix_seed(hp.seed, epoch + 1));
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    double num = 0.0;
    std::size_t den = 0;
    double epsilon = 1.0;
    for (std::size_t begin = 0; begin < order.size(); begin += hp.batch) {
      const std::size_t end = std::min(order.size(), begin + hp.batch);
      switch (curriculum) {
        case Curriculum::always_truth: epsilon = 1.0; break;
        case Curriculum::always_model: epsilon = 0.0; break;
        case Curriculum::scheduled: epsilon = schedule.epsilon(); break;
      }
      Tape tape(true);
      Seq2SeqModel::Bound bound = model.bind(tape);
      Var loss{};
      const BatchLoss bl =
          batch_loss(tape, model, bound, train_s, order, begin, end, epsilon, coin_rng, &loss);
      schedule.advance();  // one iteration per minibatch step
      if (bl.count == 0) continue;
      if (!std::isfinite(bl.value)) {
        throw Error("train: non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                    std::to_string(begin / hp.batch) + " (value " + std::to_string(bl.value) + ")");
      }
      num += bl.value * static_cast<double>(bl.count);
      den += bl.count;
      zero_grads(params);
      tape.backward(loss);
      if (hp.grad_clip > 0.0) clip_grad_norm(params, hp.grad_clip);
      adam_step(params, AdamConfig{lr});
    }
    const double train_loss = den > 0 ? num / static_cast<double>(den) : 0.0;
    const double val_loss =
        val_s.empty() ? train_loss : evaluate_normalized(model, val_s).overall_mae;
    report.epochs.push_back(EpochStats{train_loss, val_loss, lr, epsilon});

    if (val_loss < best_val) {
      best_val = val_loss;
      report.best_epoch = epoch;
      best_snapshot.clear();
      for (ParamTensor* p : params) best_snapshot.push_back(*p);
      epochs_since_best = 0;
    } else {
      ++epochs_since_best;
    }
    if (hp.stop_train_loss > 0.0 && train_loss < hp.stop_train_loss) break;
    if (epochs_since_best >= hp.patience) break;
  }

  if (!best_snapshot.empty()) {
    for (std::size_t i = 0; i < params.size(); ++i) *params[i] = best_snapshot[i];
  }
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return report;
}

std::vector<DenseMatrix> predict(const ForecastSample& sample, Seq2SeqModel& model,
                                 const ZScore& z) {
  std::vector<DenseMatrix> preds = model.forecast(sample);
  for (DenseMatrix& p : preds) {
    for (std::size_t i = 0; i < p.size(); ++i) p.data()[i] = z.invert(p.data()[i]);
  }
  return preds;
}

EvalResult evaluate_normalized(Seq2SeqModel& model, const std::vector<ForecastSample>& samples) {
  const std::size_t horizon = model.config().horizon;
  std::vector<double> num(horizon, 0.0);
  std::vector<std::size_t> den(horizon, 0);
  for (const ForecastSample& sample : samples) {
    const std::vector<DenseMatrix> preds = model.forecast(sample);
    for (std::size_t h = 0; h < horizon; ++h) {
      for (std::size_t i = 0; i < preds[h].rows(); ++i) {
        if (!sample.target_mask[h][i]) continue;
        num[h] += std::abs(preds[h](i, 0) - sample.targets[h](i, 0));
        den[h] += 1;
      }
    }
  }
  EvalResult r;
  r.horizon_mae.resize(horizon, 0.0);
  double total_num = 0.0;
  std::size_t total_den = 0;
  for (std::size_t h = 0; h < horizon; ++h) {
    r.horizon_mae[h] = den[h] > 0 ? num[h] / static_cast<double>(den[h]) : 0.0;
    total_num += num[h];
    total_den += den[h];
  }
  r.overall_mae = total_den > 0 ? total_num / static_cast<double>(total_den) : 0.0;
  return r;
}

double evaluate_loss(Seq2SeqModel& model, const std::vector<ForecastSample>& samples,
                     double epsilon, std::size_t batch_size, std::uint64_t coin_seed) {
  if (batch_size < 1) throw Error("evaluate_loss: batch size must be >= 1");
  std::mt19937_64 coin_rng(coin_seed);
  std::vector<std::size_t> order(samples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  double num = 0.0;
  std::size_t den = 0;
  for (std::size_t begin = 0; begin < samples.size(); begin += batch_size) {
    const std::size_t end = std::min(samples.size(), begin + batch_size);
    Tape tape(false);
    Seq2SeqModel::Bound bound = model.bind(tape);
    Var loss{};
    const BatchLoss bl =
        batch_loss(tape, model, bound, samples, order, begin, end, epsilon, coin_rng, &loss);
    num += bl.value * static_cast<double>(bl.count);
    den += bl.count;
  }
  return den > 0 ? num / static_cast<double>(den) : 0.0;
}

}  // namespace dcrnn
