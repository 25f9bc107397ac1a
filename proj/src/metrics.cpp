#include "dcrnn/metrics.hpp"

#include <cmath>

namespace dcrnn {

namespace {

void check_pair(const MaskedPair& p) {
  if (p.truth.size() != p.prediction.size() || p.truth.size() != p.mask.size()) {
    throw Error("masked metric: truth/prediction/mask sizes differ");
  }
  bool any = false;
  for (std::uint8_t m : p.mask) any = any || m;
  if (!any) throw Error("masked metric: mask has no observed entries");
}

}  // namespace

double masked_mae(const MaskedPair& p) {
  check_pair(p);
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < p.truth.size(); ++i) {
    if (!p.mask[i]) continue;
    sum += std::abs(p.truth[i] - p.prediction[i]);
    ++count;
  }
  return sum / static_cast<double>(count);
}

double masked_rmse(const MaskedPair& p) {
  check_pair(p);
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < p.truth.size(); ++i) {
    if (!p.mask[i]) continue;
    const double d = p.truth[i] - p.prediction[i];
    sum += d * d;
    ++count;
  }
  return std::sqrt(sum / static_cast<double>(count));
}

double masked_mape(const MaskedPair& p) {
  check_pair(p);
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < p.truth.size(); ++i) {
    if (!p.mask[i]) continue;
    if (p.truth[i] == 0.0) {
      throw Error("masked_mape: zero truth entry is unmasked (index " + std::to_string(i) + ")");
    }
    sum += std::abs((p.truth[i] - p.prediction[i]) / p.truth[i]);
    ++count;
  }
  return sum / static_cast<double>(count);
}

HAResult historical_average(const SpeedSeries& s, Range eval_range, std::size_t period,
                            std::size_t lookback) {
  if (eval_range.end > s.steps()) throw Error("historical_average: range exceeds series");
  if (period < 1 || lookback < 1) throw Error("historical_average: bad period/lookback");
  HAResult r;
  r.predictions = DenseMatrix(eval_range.length(), s.n());
  r.mask.assign(eval_range.length() * s.n(), 0);
  for (std::size_t t = eval_range.begin; t < eval_range.end; ++t) {
    for (std::size_t i = 0; i < s.n(); ++i) {
      double sum = 0.0;
      std::size_t count = 0;
      for (std::size_t j = 1; j <= lookback; ++j) {
        if (t < j * period) break;
        const std::size_t prev = t - j * period;
        if (!s.observed(prev, i)) continue;
        sum += s.values(prev, i);
        ++count;
      }
      if (count == 0) continue;  // no prior same-phase observation
      const std::size_t row = t - eval_range.begin;
      r.predictions(row, i) = sum / static_cast<double>(count);
      r.mask[row * s.n() + i] = 1;
    }
  }
  return r;
}

}  // namespace dcrnn
