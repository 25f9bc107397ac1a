#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "dcrnn/dense.hpp"
#include "dcrnn/graph.hpp"

namespace dcrnn {

/// Multivariate speed series: one row per 5-minute step, one column per
/// sensor. mask marks observed entries (missing readings are masked out, not
/// imputed).
struct SpeedSeries {
  std::vector<std::int64_t> timestamps;  // epoch seconds, strictly increasing
  std::vector<std::string> node_ids;
  DenseMatrix values;                // steps x N
  std::vector<std::uint8_t> mask;    // steps x N, row-major

  std::size_t steps() const { return timestamps.size(); }
  std::size_t n() const { return node_ids.size(); }
  bool observed(std::size_t t, std::size_t i) const { return mask[t * n() + i] != 0; }
};

/// Per-dataset scalar normalization fit on observed training entries only.
struct ZScore {
  double mean = 0.0;
  double std = 1.0;
  double apply(double x) const { return (x - mean) / std; }
  double invert(double z) const { return z * std + mean; }
};

struct Range {
  std::size_t begin = 0;
  std::size_t end = 0;  // exclusive
  std::size_t length() const { return end - begin; }
};

struct SplitRanges {
  Range train, val, test;
};

/// Windowed training sample. Frames are stored per time step; targets carry
/// the speed channel only, with the auxiliary channels of the target steps
/// kept separately for decoder feedback.
struct ForecastSample {
  std::vector<DenseMatrix> inputs;       // T' frames, N x P
  std::vector<DenseMatrix> targets;      // T frames, N x 1
  std::vector<DenseMatrix> target_aux;   // T frames, N x (P-1); empty when P == 1
  std::vector<std::vector<std::uint8_t>> target_mask;  // T x N
};

/// Series CSV: header `timestamp,<id_1>,...,<id_N>`, then ISO-8601 timestamp
/// plus one float per sensor. Cells equal to missing_sentinel get mask=false.
SpeedSeries load_series(const std::filesystem::path& path, double missing_sentinel = 0.0);
void save_series(const SpeedSeries& s, const std::filesystem::path& path);

/// ISO-8601 `YYYY-MM-DDTHH:MM:SS` (a space also accepted), interpreted as UTC.
std::int64_t parse_timestamp(const std::string& s);
std::string format_timestamp(std::int64_t epoch_seconds);

ZScore fit_zscore(const SpeedSeries& s, Range train_range);

/// Contiguous ordered train|val|test split; boundaries floor-rounded with the
/// remainder assigned to test.
SplitRanges chronological_split(std::size_t steps, double train_frac = 0.7, double val_frac = 0.1,
                                double test_frac = 0.2);

struct WindowOptions {
  bool time_of_day = false;      // appends (seconds-of-day / 86400) as channel 2
  const ZScore* zscore = nullptr;  // normalizes the speed channel when set
};

/// One sample per valid offset in `range` (stride 1):
/// count = range.length() - history - horizon + 1 (empty when negative).
std::vector<ForecastSample> make_windows(const SpeedSeries& s, std::size_t history,
                                         std::size_t horizon, Range range,
                                         const WindowOptions& opts = {});

/// Synthetic diffusion process over a sensor graph:
///   x(t+1) = lambda * P_out^T x(t) + (1 - lambda) * s(t+1) + noise,
/// where s is a fixed per-node seasonal forcing of the given period. Values
/// are clipped to [0, 80] mph. Deterministic per seed.
struct SynthOptions {
  std::size_t steps = 2000;
  std::uint64_t seed = 7;
  double lambda = 0.9;
  double noise_std = 1.0;
  std::size_t period = 288;
  double seasonal_mean = 40.0;
  double seasonal_amplitude = 35.0;
  std::int64_t start_time = 1330560000;  // 2012-03-01T00:00:00Z
};

SpeedSeries synth_diffusion(const WeightedDigraph& g, const SynthOptions& opts);

}  // namespace dcrnn
