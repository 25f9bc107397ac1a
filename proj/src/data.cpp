#include "dcrnn/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

namespace dcrnn {

namespace {

constexpr std::int64_t kSecondsPerDay = 86400;

// Howard Hinnant's days-from-civil algorithm.
std::int64_t days_from_civil(int y, int m, int d) {
  y -= m <= 2;
  const int era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153u * static_cast<unsigned>(m + (m > 2 ? -3 : 9)) + 2u) / 5u +
                       static_cast<unsigned>(d) - 1u;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return static_cast<std::int64_t>(era) * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, int& y, int& m, int& d) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t yy = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
  m = static_cast<int>(mp + (mp < 10 ? 3 : -9));
  y = static_cast<int>(yy + (m <= 2));
}

}  // namespace

std::int64_t parse_timestamp(const std::string& s) {
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, sec = 0;
  char sep = 0;
  if (std::sscanf(s.c_str(), "%d-%d-%d%c%d:%d:%d", &y, &mo, &d, &sep, &h, &mi, &sec) != 7 ||
      (sep != 'T' && sep != ' ')) {
    throw Error("unparsable timestamp '" + s + "'");
  }
  if (mo < 1 || mo > 12 || d < 1 || d > 31 || h < 0 || h > 23 || mi < 0 || mi > 59 || sec < 0 ||
      sec > 60) {
    throw Error("timestamp out of range '" + s + "'");
  }
  return days_from_civil(y, mo, d) * kSecondsPerDay + h * 3600 + mi * 60 + sec;
}

std::string format_timestamp(std::int64_t epoch_seconds) {
  std::int64_t days = epoch_seconds / kSecondsPerDay;
  std::int64_t rem = epoch_seconds % kSecondsPerDay;
  if (rem < 0) {
    rem += kSecondsPerDay;
    days -= 1;
  }
  int y, m, d;
  civil_from_days(days, y, m, d);
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02lld:%02lld:%02lld", y, m, d,
                static_cast<long long>(rem / 3600), static_cast<long long>((rem / 60) % 60),
                static_cast<long long>(rem % 60));
  return buf;
}

SpeedSeries load_series(const std::filesystem::path& path, double missing_sentinel) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open: " + path.string());
  std::string line;
  std::size_t line_no = 0;

  if (!std::getline(in, line)) throw Error("empty series file: " + path.string());
  ++line_no;
  std::istringstream header(line);
  std::string cell;
  if (!std::getline(header, cell, ',') || cell != "timestamp") {
    throw Error("series header must start with 'timestamp' at " + path.string() + ":1");
  }
  SpeedSeries s;
  while (std::getline(header, cell, ',')) s.node_ids.push_back(cell);
  if (s.node_ids.empty()) throw Error("series header has no sensor columns: " + path.string());

  std::vector<double> values;
  std::vector<std::uint8_t> mask;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream row(line);
    if (!std::getline(row, cell, ',')) {
      throw Error("bad series row at " + path.string() + ":" + std::to_string(line_no));
    }
    std::int64_t ts;
    try {
      ts = parse_timestamp(cell);
    } catch (const Error& e) {
      throw Error(std::string(e.what()) + " at " + path.string() + ":" + std::to_string(line_no));
    }
    if (!s.timestamps.empty() && ts <= s.timestamps.back()) {
      throw Error("non-monotone timestamp at " + path.string() + ":" + std::to_string(line_no));
    }
    s.timestamps.push_back(ts);
    std::size_t cells = 0;
    while (std::getline(row, cell, ',')) {
      char* end = nullptr;
      const double v = std::strtod(cell.c_str(), &end);
      if (end == cell.c_str()) {
        throw Error("bad value at " + path.string() + ":" + std::to_string(line_no));
      }
      const bool observed = v != missing_sentinel && std::isfinite(v);
      values.push_back(observed ? v : 0.0);
      mask.push_back(observed ? 1 : 0);
      ++cells;
    }
    if (cells != s.node_ids.size()) {
      throw Error("ragged row (" + std::to_string(cells) + " of " +
                  std::to_string(s.node_ids.size()) + " cells) at " + path.string() + ":" +
                  std::to_string(line_no));
    }
  }
  s.values = DenseMatrix(s.timestamps.size(), s.node_ids.size());
  std::copy(values.begin(), values.end(), s.values.data());
  s.mask = std::move(mask);
  return s;
}

void save_series(const SpeedSeries& s, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open for writing: " + path.string());
  out << "timestamp";
  for (const std::string& id : s.node_ids) out << ',' << id;
  out << '\n';
  char buf[64];
  for (std::size_t t = 0; t < s.steps(); ++t) {
    out << format_timestamp(s.timestamps[t]);
    for (std::size_t i = 0; i < s.n(); ++i) {
      const double v = s.observed(t, i) ? s.values(t, i) : 0.0;
      std::snprintf(buf, sizeof(buf), "%.17g", v);
      out << ',' << buf;
    }
    out << '\n';
  }
}

ZScore fit_zscore(const SpeedSeries& s, Range train_range) {
  if (train_range.end > s.steps() || train_range.begin >= train_range.end) {
    throw Error("fit_zscore: bad training range");
  }
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t t = train_range.begin; t < train_range.end; ++t) {
    for (std::size_t i = 0; i < s.n(); ++i) {
      if (!s.observed(t, i)) continue;
      sum += s.values(t, i);
      ++count;
    }
  }
  if (count == 0) throw Error("fit_zscore: no observed entries in training range");
  const double mean = sum / static_cast<double>(count);
  double var = 0.0;
  for (std::size_t t = train_range.begin; t < train_range.end; ++t) {
    for (std::size_t i = 0; i < s.n(); ++i) {
      if (!s.observed(t, i)) continue;
      const double d = s.values(t, i) - mean;
      var += d * d;
    }
  }
  const double std_dev = std::sqrt(var / static_cast<double>(count));  // population std
  if (!(std_dev > 0.0)) throw Error("fit_zscore: zero variance in training range");
  return ZScore{mean, std_dev};
}

SplitRanges chronological_split(std::size_t steps, double train_frac, double val_frac,
                                double test_frac) {
  if (std::abs(train_frac + val_frac + test_frac - 1.0) > 1e-9) {
    throw Error("chronological_split: fractions must sum to 1");
  }
  const std::size_t n_train = static_cast<std::size_t>(std::floor(steps * train_frac));
  const std::size_t n_val = static_cast<std::size_t>(std::floor(steps * val_frac));
  SplitRanges r;
  r.train = {0, n_train};
  r.val = {n_train, n_train + n_val};
  r.test = {n_train + n_val, steps};  // remainder to test
  return r;
}

std::vector<ForecastSample> make_windows(const SpeedSeries& s, std::size_t history,
                                         std::size_t horizon, Range range,
                                         const WindowOptions& opts) {
  if (history < 1 || horizon < 1) throw Error("make_windows: history and horizon must be >= 1");
  if (range.end > s.steps()) throw Error("make_windows: range exceeds series length");
  std::vector<ForecastSample> out;
  if (range.length() < history + horizon) return out;  // too short: no samples, not an error
  const std::size_t count = range.length() - history - horizon + 1;
  const std::size_t p = opts.time_of_day ? 2 : 1;
  out.reserve(count);

  auto frame_at = [&](std::size_t t) {
    DenseMatrix f(s.n(), p);
    for (std::size_t i = 0; i < s.n(); ++i) {
      double v = s.values(t, i);
      if (opts.zscore) v = opts.zscore->apply(v);
      f(i, 0) = v;
      if (opts.time_of_day) {
        const std::int64_t sod = ((s.timestamps[t] % kSecondsPerDay) + kSecondsPerDay) %
                                 kSecondsPerDay;
        f(i, 1) = static_cast<double>(sod) / static_cast<double>(kSecondsPerDay);
      }
    }
    return f;
  };

  for (std::size_t off = 0; off < count; ++off) {
    const std::size_t t0 = range.begin + off;
    ForecastSample sample;
    sample.inputs.reserve(history);
    for (std::size_t t = t0; t < t0 + history; ++t) sample.inputs.push_back(frame_at(t));
    sample.targets.reserve(horizon);
    sample.target_mask.reserve(horizon);
    for (std::size_t t = t0 + history; t < t0 + history + horizon; ++t) {
      DenseMatrix frame = frame_at(t);
      DenseMatrix speed(s.n(), 1);
      for (std::size_t i = 0; i < s.n(); ++i) speed(i, 0) = frame(i, 0);
      sample.targets.push_back(std::move(speed));
      if (p > 1) {
        DenseMatrix aux(s.n(), p - 1);
        for (std::size_t i = 0; i < s.n(); ++i) {
          for (std::size_t c = 1; c < p; ++c) aux(i, c - 1) = frame(i, c);
        }
        sample.target_aux.push_back(std::move(aux));
      }
      std::vector<std::uint8_t> m(s.n());
      for (std::size_t i = 0; i < s.n(); ++i) m[i] = s.observed(t, i) ? 1 : 0;
      sample.target_mask.push_back(std::move(m));
    }
    out.push_back(std::move(sample));
  }
  return out;
}

SpeedSeries synth_diffusion(const WeightedDigraph& g, const SynthOptions& opts) {
  if (opts.steps < 1) throw Error("synth_diffusion: steps must be >= 1");
  const std::size_t n = g.n();
  const SparseMatrix p_out_t = transpose(out_transition(g));
  std::mt19937_64 rng(opts.seed);
  std::normal_distribution<double> noise(0.0, 1.0);

  static const double pi = std::acos(-1.0);
  auto forcing = [&](std::size_t t, std::size_t i) {
    const double phase = 2.0 * pi * static_cast<double>(t % opts.period) /
                         static_cast<double>(opts.period);
    return opts.seasonal_mean +
           opts.seasonal_amplitude * std::sin(phase + 0.25 * static_cast<double>(i));
  };
  auto clip = [](double v) { return std::min(80.0, std::max(0.0, v)); };

  SpeedSeries s;
  s.node_ids = g.node_ids();
  s.values = DenseMatrix(opts.steps, n);
  s.mask.assign(opts.steps * n, 1);
  s.timestamps.reserve(opts.steps);

  DenseMatrix x(n, 1);
  for (std::size_t i = 0; i < n; ++i) x(i, 0) = clip(forcing(0, i));
  for (std::size_t t = 0; t < opts.steps; ++t) {
    s.timestamps.push_back(opts.start_time + static_cast<std::int64_t>(t) * 300);
    for (std::size_t i = 0; i < n; ++i) s.values(t, i) = x(i, 0);
    if (t + 1 == opts.steps) break;
    DenseMatrix mixed = spmm(p_out_t, x);
    for (std::size_t i = 0; i < n; ++i) {
      double v = opts.lambda * mixed(i, 0) + (1.0 - opts.lambda) * forcing(t + 1, i);
      if (opts.noise_std > 0.0) v += opts.noise_std * noise(rng);
      x(i, 0) = clip(v);
    }
  }
  return s;
}

}  // namespace dcrnn
