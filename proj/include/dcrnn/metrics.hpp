#pragma once

#include <cstdint>
#include <vector>

#include "dcrnn/data.hpp"

namespace dcrnn {

/// Truth/prediction arrays with an observation mask over the same indices.
struct MaskedPair {
  std::vector<double> truth;
  std::vector<double> prediction;
  std::vector<std::uint8_t> mask;
};

/// Mean absolute error over mask-true entries. Throws on an empty mask.
double masked_mae(const MaskedPair& p);
/// Root mean square error over mask-true entries.
double masked_rmse(const MaskedPair& p);
/// Mean absolute percentage error as a fraction (formatting to % is a CLI
/// concern). Throws if any mask-true truth entry is zero.
double masked_mape(const MaskedPair& p);

/// Seasonal-average baseline: the prediction at step t is the mean of the
/// observed values at t - j*period for j = 1..lookback (fewer if unavailable).
/// Steps with no prior same-phase observation stay unpredicted (mask=false).
struct HAResult {
  DenseMatrix predictions;         // eval_range.length() x N
  std::vector<std::uint8_t> mask;  // same layout
};

HAResult historical_average(const SpeedSeries& s, Range eval_range, std::size_t period = 2016,
                            std::size_t lookback = 4);

}  // namespace dcrnn
