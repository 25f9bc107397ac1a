#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "dcrnn/data.hpp"
#include "dcrnn/dcgru.hpp"

namespace dcrnn {

/// Decoder input curriculum during training.
enum class Curriculum { always_truth, always_model, scheduled };
/// Temporal architecture: full model, seq2seq without scheduled sampling, or
/// the feed-forward one-step variant rolled out autoregressively.
enum class TemporalMode { dcrnn, dcrnn_seq, dcnn };

std::string to_string(Curriculum c);
Curriculum curriculum_from_string(const std::string& s);
std::string to_string(TemporalMode m);
TemporalMode temporal_mode_from_string(const std::string& s);

/// Inverse-sigmoid decay tau / (tau + exp(i / tau)).
double sampling_probability(std::uint64_t iteration, double tau);

struct SamplingSchedule {
  double tau = 3000.0;
  std::uint64_t iteration = 0;
  double epsilon() const { return sampling_probability(iteration, tau); }
  void advance() { ++iteration; }
};

struct ModelConfig {
  std::size_t history = 12;  // T'
  std::size_t horizon = 12;  // T
  std::size_t layers = 2;
  std::size_t units = 64;  // Q
  std::size_t k_max = 3;   // K
  std::size_t input_dim = 1;  // P (speed, plus optional time-of-day)
  ConvMode conv_mode = ConvMode::bidirectional;
  Curriculum curriculum = Curriculum::scheduled;
  TemporalMode temporal_mode = TemporalMode::dcrnn;
  double lambda_max = 2.0;  // <= 0 requests a power-iteration estimate (chebnet)
};

struct Hyperparams {
  double base_lr = 1e-2;
  std::size_t batch = 64;
  std::size_t epochs = 100;
  std::size_t patience = 50;
  double tau = 3000.0;
  std::uint64_t seed = 1;
  std::uint64_t lr_start_epoch = 20;
  std::uint64_t lr_period = 10;
  double lr_factor = 0.1;
  double grad_clip = 0.0;             // 0 disables
  std::size_t max_train_windows = 0;  // 0 = all (strided subsample otherwise)
  std::size_t max_val_windows = 0;
  double stop_train_loss = 0.0;  // stop once train MAE drops below (0 disables)
};

struct EpochStats {
  double train_loss = 0.0;
  double val_loss = 0.0;
  double lr = 0.0;
  double epsilon = 0.0;
};

struct TrainReport {
  std::vector<EpochStats> epochs;
  std::size_t best_epoch = 0;  // index of the lowest validation loss
  double wall_seconds = 0.0;
};

/// Encoder-decoder forecaster with DCGRU layers, or the stacked-convolution
/// one-step variant in dcnn mode. Owns all parameters and the sparse
/// operators; must outlive any tape recorded against it.
class Seq2SeqModel {
 public:
  Seq2SeqModel(const ModelConfig& cfg, const WeightedDigraph& graph, std::uint64_t seed);
  Seq2SeqModel(const Seq2SeqModel&) = delete;
  Seq2SeqModel& operator=(const Seq2SeqModel&) = delete;

  const ModelConfig& config() const { return cfg_; }
  std::size_t n_nodes() const { return n_; }
  const ConvOperators& operators() const { return ops_; }
  std::vector<ParamTensor*> params();
  std::vector<const ParamTensor*> params() const;
  std::vector<DCGRULayer>& encoder_layers() { return encoder_; }

  /// Consumes the input frames in order; returns the final stacked state.
  DCGRUState encode(const std::vector<DenseMatrix>& inputs);

  /// Decodes horizon steps from a state. The first decoder input is the
  /// all-zero GO frame; each later input is ground truth with probability
  /// epsilon, else the previous prediction. sample supplies targets and the
  /// known auxiliary channels; it may be null only if epsilon == 0 and the
  /// model has no auxiliary inputs.
  std::vector<DenseMatrix> decode(const DCGRUState& state, const ForecastSample* sample,
                                  double epsilon, std::mt19937_64& coin_rng);

  /// Free-running forecast in normalized units (dispatches on temporal mode).
  std::vector<DenseMatrix> forecast(const ForecastSample& sample);

  // Tape-level pieces used by the training loop; parameters are bound once
  // per tape via bind().
  struct Bound {
    std::vector<DCGRULayerVars> encoder, decoder;
    Var proj_w, proj_b;
    std::vector<std::pair<Var, Var>> dcnn;  // (coeffs, bias) per layer
  };
  Bound bind(Tape& t);

  std::vector<Var> encode_on_tape(Tape& t, const Bound& b, const std::vector<DenseMatrix>& inputs);
  std::vector<Var> decode_on_tape(Tape& t, const Bound& b, std::vector<Var> state,
                                  const ForecastSample* sample, double epsilon,
                                  std::mt19937_64& coin_rng);
  /// One-step prediction from the concatenated history (dcnn mode).
  Var dcnn_step_on_tape(Tape& t, const Bound& b, const std::vector<DenseMatrix>& history);
  /// Autoregressive dcnn rollout over the sample's horizon.
  std::vector<Var> dcnn_rollout_on_tape(Tape& t, const Bound& b, const ForecastSample& sample);

 private:
  ModelConfig cfg_;
  std::size_t n_ = 0;
  ConvOperators ops_;
  std::vector<DCGRULayer> encoder_;
  std::vector<DCGRULayer> decoder_;
  ParamTensor proj_w_;
  ParamTensor proj_b_;
  struct DcnnLayer {
    ParamTensor coeffs;
    ParamTensor bias;
    Activation act;
    std::size_t in_dim, out_dim;
  };
  std::vector<DcnnLayer> dcnn_;

  Var feedback_input(Tape& t, Var prediction, const ForecastSample* sample, std::size_t step);
};

/// Trains with masked-MAE loss over all horizons jointly, Adam with the step
/// schedule, scheduled sampling advanced once per optimizer step, and early
/// stopping on validation loss. The best-validation parameters are restored
/// into the model before returning. Throws on a non-finite loss.
TrainReport train(Seq2SeqModel& model, const std::vector<ForecastSample>& train_samples,
                  const std::vector<ForecastSample>& val_samples, const Hyperparams& hp);

/// Free-running forecast converted back to physical units.
std::vector<DenseMatrix> predict(const ForecastSample& sample, Seq2SeqModel& model,
                                 const ZScore& z);

struct EvalResult {
  double overall_mae = 0.0;
  std::vector<double> horizon_mae;  // one entry per forecast step
};

/// Masked MAE of free-running forecasts in normalized units.
EvalResult evaluate_normalized(Seq2SeqModel& model, const std::vector<ForecastSample>& samples);

/// Mean masked-MAE loss of the dataset at fixed parameters, teacher-forced
/// with the given epsilon. Independent of batch partitioning by construction;
/// batch_size only controls tape sizes.
double evaluate_loss(Seq2SeqModel& model, const std::vector<ForecastSample>& samples,
                     double epsilon, std::size_t batch_size, std::uint64_t coin_seed);

/// Evenly strided subsample of at most cap windows (cap = 0 keeps all).
std::vector<ForecastSample> subsample_windows(std::vector<ForecastSample> samples, std::size_t cap);

}  // namespace dcrnn
