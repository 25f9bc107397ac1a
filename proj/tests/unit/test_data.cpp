#include <doctest.h>

#include <cmath>
#include <fstream>
#include <random>

#include "dcrnn/data.hpp"
#include "oracles.hpp"

using namespace dcrnn;

namespace {

std::filesystem::path write_temp(const std::string& name, const std::string& content) {
  const auto path = std::filesystem::temp_directory_path() / name;
  std::ofstream out(path);
  out << content;
  return path;
}

WeightedDigraph chain_graph(std::size_t n) {
  std::vector<Triplet> t;
  for (std::size_t i = 0; i + 1 < n; ++i) t.push_back({i, i + 1, 1.0});
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < n; ++i) ids.push_back("s" + std::to_string(i));
  return WeightedDigraph(std::move(ids), SparseMatrix::from_triplets(n, n, std::move(t)), 1.0,
                         10.0);
}

}  // namespace

TEST_CASE("timestamp parse/format round-trip") {
  const std::int64_t ts = parse_timestamp("2012-03-01T00:05:00");
  CHECK(format_timestamp(ts) == "2012-03-01T00:05:00");
  CHECK(parse_timestamp("2012-03-01 00:05:00") == ts);
  CHECK(ts == 1330560300);
  CHECK_THROWS_AS(parse_timestamp("yesterday"), Error);
}

TEST_CASE("load_series: fixture parse, sentinel masking, error diagnostics") {
  const auto path = write_temp("dcrnn_series_ok.csv",
                               "timestamp,a,b\n"
                               "2012-03-01T00:00:00,10.5,20\n"
                               "2012-03-01T00:05:00,0.0,21\n"
                               "2012-03-01T00:10:00,12.5,22\n");
  const SpeedSeries s = load_series(path);
  CHECK(s.steps() == 3);
  CHECK(s.n() == 2);
  CHECK(s.values(0, 0) == 10.5);
  CHECK_FALSE(s.observed(1, 0));  // 0.0 is the missing sentinel
  CHECK(s.observed(1, 1));
  std::filesystem::remove(path);

  const auto ragged = write_temp("dcrnn_series_ragged.csv",
                                 "timestamp,a,b\n2012-03-01T00:00:00,1.0\n");
  CHECK_THROWS_WITH_AS(load_series(ragged), doctest::Contains(":2"), Error);
  std::filesystem::remove(ragged);

  const auto backwards = write_temp("dcrnn_series_backwards.csv",
                                    "timestamp,a\n"
                                    "2012-03-01T00:05:00,1.0\n"
                                    "2012-03-01T00:00:00,2.0\n");
  CHECK_THROWS_WITH_AS(load_series(backwards), doctest::Contains("non-monotone"), Error);
  std::filesystem::remove(backwards);
}

TEST_CASE("series save/load round-trip") {
  std::mt19937_64 rng(101);
  SpeedSeries s;
  s.node_ids = {"a", "b", "c"};
  s.values = oracle::random_dense(5, 3, rng, 1.0, 70.0);
  s.mask.assign(15, 1);
  s.mask[4] = 0;
  for (int t = 0; t < 5; ++t) s.timestamps.push_back(1330560000 + 300 * t);
  const auto path = std::filesystem::temp_directory_path() / "dcrnn_series_rt.csv";
  save_series(s, path);
  const SpeedSeries r = load_series(path);
  CHECK(r.node_ids == s.node_ids);
  CHECK(r.timestamps == s.timestamps);
  CHECK(r.mask == s.mask);  // masked cell was written as the sentinel
  for (std::size_t i = 0; i < 15; ++i) {
    if (s.mask[i]) CHECK(r.values.data()[i] == s.values.data()[i]);
  }
  std::filesystem::remove(path);
}

TEST_CASE("fit_zscore: hand stats, masking, round-trip") {
  SpeedSeries s;
  s.node_ids = {"a"};
  s.timestamps = {0, 300, 600};
  s.values = DenseMatrix(3, 1);
  s.values(0, 0) = 1.0;
  s.values(1, 0) = 3.0;
  s.values(2, 0) = 500.0;  // excluded: test range only covers the first two
  s.mask = {1, 1, 1};
  const ZScore z = fit_zscore(s, {0, 2});
  CHECK(z.mean == doctest::Approx(2.0));
  CHECK(z.std == doctest::Approx(1.0));  // population std
  CHECK(z.invert(z.apply(1.7)) == doctest::Approx(1.7).epsilon(1e-12));

  // masked entries are excluded from the statistics
  s.mask = {1, 0, 1};
  const ZScore zm = fit_zscore(s, {0, 3});
  CHECK(zm.mean == doctest::Approx((1.0 + 500.0) / 2.0));

  s.values(1, 0) = 1.0;
  s.mask = {1, 1, 0};
  CHECK_THROWS_AS(fit_zscore(s, {0, 2}), Error);  // zero variance
}

TEST_CASE("zscore statistics depend only on the training range") {
  std::mt19937_64 rng(102);
  SpeedSeries s;
  s.node_ids = {"a", "b"};
  s.values = oracle::random_dense(100, 2, rng, 10.0, 70.0);
  s.mask.assign(200, 1);
  for (int t = 0; t < 100; ++t) s.timestamps.push_back(300 * t);
  const ZScore z1 = fit_zscore(s, {0, 70});
  for (std::size_t t = 70; t < 100; ++t) {
    s.values(t, 0) = 0.12345;  // stomp the test region
  }
  const ZScore z2 = fit_zscore(s, {0, 70});
  CHECK(z1.mean == z2.mean);
  CHECK(z1.std == z2.std);
}

TEST_CASE("chronological_split: floor rounding with remainder to test") {
  const SplitRanges a = chronological_split(100);
  CHECK(a.train.begin == 0);
  CHECK(a.train.end == 70);
  CHECK(a.val.end == 80);
  CHECK(a.test.end == 100);

  const SplitRanges b = chronological_split(10);
  CHECK(b.train.length() == 7);
  CHECK(b.val.length() == 1);
  CHECK(b.test.length() == 2);

  const SplitRanges c = chronological_split(101);
  CHECK(c.train.length() == 70);
  CHECK(c.val.length() == 10);
  CHECK(c.test.length() == 21);  // remainder lands in test

  CHECK_THROWS_AS(chronological_split(10, 0.5, 0.1, 0.1), Error);
}

TEST_CASE("make_windows: counts, boundaries, defaults") {
  std::mt19937_64 rng(103);
  SpeedSeries s;
  s.node_ids = {"a", "b"};
  s.values = oracle::random_dense(40, 2, rng, 10.0, 70.0);
  s.mask.assign(80, 1);
  for (int t = 0; t < 40; ++t) s.timestamps.push_back(1330560000 + 300 * t);

  CHECK(make_windows(s, 3, 2, {0, 5}).size() == 1);
  CHECK(make_windows(s, 3, 2, {0, 4}).empty());
  CHECK(make_windows(s, 12, 12, {0, 40}).size() == 40 - 12 - 12 + 1);

  const auto windows = make_windows(s, 3, 2, {10, 20});
  CHECK(windows.size() == 10 - 3 - 2 + 1);
  // first sample starts at step 10: inputs 10..12, targets 13..14
  CHECK(windows[0].inputs[0](0, 0) == s.values(10, 0));
  CHECK(windows[0].targets[0](1, 0) == s.values(13, 1));
  CHECK(windows[0].targets.back()(0, 0) == s.values(14, 0));
  // no sample crosses the range end
  CHECK(windows.back().targets.back()(0, 0) == s.values(19, 0));
}

TEST_CASE("make_windows: normalization and time-of-day channel") {
  SpeedSeries s;
  s.node_ids = {"a"};
  s.values = DenseMatrix(6, 1);
  for (int t = 0; t < 6; ++t) {
    s.values(t, 0) = 10.0 * (t + 1);
    s.timestamps.push_back(1330560000 + 300 * t);  // midnight onward
  }
  s.mask.assign(6, 1);

  ZScore z{30.0, 10.0};
  WindowOptions opts;
  opts.zscore = &z;
  opts.time_of_day = true;
  const auto windows = make_windows(s, 2, 1, {0, 6}, opts);
  REQUIRE(windows.size() == 4);
  CHECK(windows[0].inputs[0].cols() == 2);
  CHECK(windows[0].inputs[0](0, 0) == doctest::Approx((10.0 - 30.0) / 10.0));
  CHECK(windows[0].inputs[0](0, 1) == doctest::Approx(0.0));          // 00:00
  CHECK(windows[0].inputs[1](0, 1) == doctest::Approx(300.0 / 86400.0));
  REQUIRE(windows[0].target_aux.size() == 1);
  CHECK(windows[0].target_aux[0](0, 0) == doctest::Approx(600.0 / 86400.0));
  // target channel is normalized speed only
  CHECK(windows[0].targets[0].cols() == 1);
  CHECK(windows[0].targets[0](0, 0) == doctest::Approx(0.0));  // 30 normalized
}

TEST_CASE("make_windows carries the observation mask into targets") {
  SpeedSeries s;
  s.node_ids = {"a", "b"};
  s.values = DenseMatrix(5, 2, 50.0);
  s.mask.assign(10, 1);
  s.mask[3 * 2 + 1] = 0;  // step 3, sensor b missing
  for (int t = 0; t < 5; ++t) s.timestamps.push_back(300 * t);
  const auto windows = make_windows(s, 2, 2, {0, 5});
  REQUIRE(windows.size() == 2);
  CHECK(windows[0].target_mask[1][1] == 0);  // target step 3 of first window
  CHECK(windows[0].target_mask[1][0] == 1);
  CHECK(windows[1].target_mask[0][1] == 0);
}

TEST_CASE("synth_diffusion: lambda 0 with no noise reproduces the forcing; determinism") {
  const WeightedDigraph g = chain_graph(4);
  SynthOptions opts;
  opts.steps = 600;
  opts.lambda = 0.0;
  opts.noise_std = 0.0;
  const SpeedSeries s = synth_diffusion(g, opts);
  CHECK(s.steps() == 600);
  // forcing repeats with the seasonal period
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(s.values(0, i) == doctest::Approx(s.values(288, i)).epsilon(1e-12));
    CHECK(s.values(10, i) == doctest::Approx(s.values(298, i)).epsilon(1e-12));
  }
  // stated seasonal shape at t = 0
  static const double pi = std::acos(-1.0);
  for (std::size_t i = 0; i < 4; ++i) {
    const double want = 40.0 + 35.0 * std::sin(0.25 * static_cast<double>(i));
    CHECK(s.values(0, i) == doctest::Approx(want).epsilon(1e-12));
  }
  (void)pi;

  SynthOptions noisy;
  noisy.steps = 50;
  noisy.seed = 99;
  const SpeedSeries a = synth_diffusion(g, noisy);
  const SpeedSeries b = synth_diffusion(g, noisy);
  CHECK(max_abs_diff(a.values, b.values) == 0.0);
  noisy.seed = 100;
  const SpeedSeries c = synth_diffusion(g, noisy);
  CHECK(max_abs_diff(a.values, c.values) > 0.0);
}

TEST_CASE("synth_diffusion: values stay in [0, 80] and timestamps advance by 5 minutes") {
  const WeightedDigraph g = chain_graph(3);
  SynthOptions opts;
  opts.steps = 400;
  opts.noise_std = 30.0;  // force clipping
  const SpeedSeries s = synth_diffusion(g, opts);
  for (std::size_t i = 0; i < s.values.size(); ++i) {
    CHECK(s.values.data()[i] >= 0.0);
    CHECK(s.values.data()[i] <= 80.0);
  }
  for (std::size_t t = 1; t < s.steps(); ++t) {
    CHECK(s.timestamps[t] - s.timestamps[t - 1] == 300);
  }
}

TEST_CASE("synth_diffusion: upstream perturbations reach the downstream node one step later") {
  // directed ring s0 -> s1 -> s2 -> s0: s1's next value mixes s0's current value
  std::vector<Triplet> ring = {{0, 1, 1.0}, {1, 2, 1.0}, {2, 0, 1.0}};
  const WeightedDigraph g({"s0", "s1", "s2"}, SparseMatrix::from_triplets(3, 3, std::move(ring)),
                          1.0, 10.0);
  SynthOptions opts;
  opts.steps = 3000;
  opts.seed = 7;
  opts.lambda = 0.9;
  opts.noise_std = 1.0;
  opts.seasonal_amplitude = 0.0;  // isolate the noise-driven dynamics
  const SpeedSeries s = synth_diffusion(g, opts);

  auto corr = [&](int lag) {
    // corr(x0(t), x1(t + lag)) over the stationary stretch
    double ma = 0, mb = 0;
    const std::size_t lo = 100, hi = opts.steps - 10;
    const double n = static_cast<double>(hi - lo);
    for (std::size_t t = lo; t < hi; ++t) {
      ma += s.values(t, 0);
      mb += s.values(t + lag, 1);
    }
    ma /= n;
    mb /= n;
    double cov = 0, va = 0, vb = 0;
    for (std::size_t t = lo; t < hi; ++t) {
      const double da = s.values(t, 0) - ma;
      const double db = s.values(t + lag, 1) - mb;
      cov += da * db;
      va += da * da;
      vb += db * db;
    }
    return cov / std::sqrt(va * vb);
  };
  CHECK(corr(1) > corr(0));
  CHECK(corr(1) > 0.3);  // the directed edge carries real signal
}
