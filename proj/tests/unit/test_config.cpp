#include <doctest.h>

#include <fstream>

#include "dcrnn/config.hpp"

using namespace dcrnn;

namespace {

std::filesystem::path write_temp(const std::string& name, const std::string& content) {
  const auto path = std::filesystem::temp_directory_path() / name;
  std::ofstream out(path);
  out << content;
  return path;
}

}  // namespace

TEST_CASE("config: parsing, comments, and defaults") {
  const auto path = write_temp("dcrnn_cfg_ok.txt",
                               "# run config\n"
                               "series = data/series.csv\n"
                               "graph = data/graph.txt\n"
                               "horizon = 6\n"
                               "history = 4   # inline comment\n"
                               "units = 16\n"
                               "conv_mode = forward_only\n"
                               "temporal_mode = dcnn\n"
                               "curriculum = always_truth\n"
                               "lr = 0.005\n"
                               "seed = 42\n"
                               "time_of_day = true\n"
                               "split = 0.6, 0.2, 0.2\n");
  const RunConfig cfg = RunConfig::load(path);
  CHECK(cfg.model.horizon == 6);
  CHECK(cfg.model.history == 4);
  CHECK(cfg.model.units == 16);
  CHECK(cfg.model.conv_mode == ConvMode::forward_only);
  CHECK(cfg.model.temporal_mode == TemporalMode::dcnn);
  CHECK(cfg.model.curriculum == Curriculum::always_truth);
  CHECK(cfg.hyper.base_lr == 0.005);
  CHECK(cfg.hyper.seed == 42);
  CHECK(cfg.time_of_day);
  CHECK(cfg.model.input_dim == 2);
  CHECK(cfg.split_train == 0.6);
  // untouched fields keep their defaults
  CHECK(cfg.model.k_max == 3);
  CHECK(cfg.hyper.batch == 64);
  CHECK(cfg.hyper.tau == 3000.0);
  CHECK(cfg.hyper.patience == 50);
  std::filesystem::remove(path);
}

TEST_CASE("config: unknown keys and malformed lines carry line numbers") {
  const auto bad_key = write_temp("dcrnn_cfg_badkey.txt", "series = a\nwhatever = 3\n");
  CHECK_THROWS_WITH_AS(RunConfig::load(bad_key), doctest::Contains(":2"), Error);
  std::filesystem::remove(bad_key);

  const auto no_eq = write_temp("dcrnn_cfg_noeq.txt", "series a\n");
  CHECK_THROWS_WITH_AS(RunConfig::load(no_eq), doctest::Contains(":1"), Error);
  std::filesystem::remove(no_eq);

  const auto bad_mode = write_temp("dcrnn_cfg_badmode.txt", "conv_mode = sideways\n");
  CHECK_THROWS_AS(RunConfig::load(bad_mode), Error);
  std::filesystem::remove(bad_mode);
}

TEST_CASE("config: validate checks paths and fractions") {
  RunConfig cfg;
  CHECK_THROWS_AS(cfg.validate(), Error);  // missing series
  cfg.series = "/nonexistent/nowhere.csv";
  cfg.graph = "/nonexistent/graph.txt";
  CHECK_THROWS_AS(cfg.validate(), Error);

  const auto series = write_temp("dcrnn_cfg_series.csv", "timestamp,a\n");
  const auto graph = write_temp("dcrnn_cfg_graph.txt", "");
  cfg.series = series;
  cfg.graph = graph;
  cfg.split_train = 0.5;  // fractions no longer sum to 1
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg.split_train = 0.7;
  CHECK_NOTHROW(cfg.validate());
  std::filesystem::remove(series);
  std::filesystem::remove(graph);
}

TEST_CASE("config: set() overrides round-trip through to_text") {
  RunConfig cfg;
  cfg.set("units", "32");
  cfg.set("epochs", "7");
  cfg.set("max_train_windows", "256");
  CHECK(cfg.model.units == 32);
  CHECK(cfg.hyper.epochs == 7);
  CHECK(cfg.hyper.max_train_windows == 256);

  const std::string text = to_text(cfg);
  const auto path = write_temp("dcrnn_cfg_roundtrip.txt", text);
  const RunConfig back = RunConfig::load(path);
  CHECK(back.model.units == 32);
  CHECK(back.hyper.epochs == 7);
  CHECK(back.hyper.max_train_windows == 256);
  std::filesystem::remove(path);
}
