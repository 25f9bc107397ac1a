// Command-line front end: graph building, synthetic data generation, training,
// evaluation, prediction, and filter export.
//
// Exit codes: 0 ok, 2 input error, 3 config/checkpoint mismatch, 4 numeric
// failure during training.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "dcrnn/checkpoint.hpp"
#include "dcrnn/config.hpp"
#include "dcrnn/data.hpp"
#include "dcrnn/dcgru.hpp"
#include "dcrnn/graph.hpp"
#include "dcrnn/metrics.hpp"
#include "dcrnn/seq2seq.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitConfig = 3;
constexpr int kExitNumeric = 4;

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

struct TrainIo {
  dcrnn::SpeedSeries series;
  dcrnn::WeightedDigraph graph;
  dcrnn::SplitRanges split;
  dcrnn::ZScore zscore;

  TrainIo(dcrnn::SpeedSeries s, dcrnn::WeightedDigraph g)
      : series(std::move(s)), graph(std::move(g)) {}
};

/// Loads series + graph per config and checks the sensor order matches.
TrainIo load_inputs(const dcrnn::RunConfig& cfg) {
  TrainIo io(dcrnn::load_series(cfg.series, cfg.missing_sentinel), dcrnn::load_graph(cfg.graph));
  if (io.series.node_ids != io.graph.node_ids()) {
    throw dcrnn::Error("series sensors do not match graph node order (check column order in " +
                       cfg.series.string() + ")");
  }
  io.split = dcrnn::chronological_split(io.series.steps(), cfg.split_train, cfg.split_val,
                                        cfg.split_test);
  io.zscore = dcrnn::fit_zscore(io.series, io.split.train);
  return io;
}

std::vector<dcrnn::ForecastSample> windows_for(const TrainIo& io, const dcrnn::RunConfig& cfg,
                                               dcrnn::Range range) {
  dcrnn::WindowOptions opts;
  opts.time_of_day = cfg.time_of_day;
  opts.zscore = &io.zscore;
  return dcrnn::make_windows(io.series, cfg.model.history, cfg.model.horizon, range, opts);
}

int cmd_build_graph(const std::string& distances_path, const std::string& nodes_path, double kappa,
                    const std::string& out_path) {
  try {
    const auto distances = dcrnn::load_distances(distances_path);
    const auto node_ids = dcrnn::load_node_ids(nodes_path);
    const dcrnn::WeightedDigraph g = dcrnn::build_adjacency(distances, node_ids, kappa);
    dcrnn::save_graph(g, out_path);
    std::cout << "n=" << g.n() << "\n"
              << "nnz=" << g.weights().nnz() << "\n"
              << "sigma=" << fmt(g.kernel_sigma()) << "\n";
    return kExitOk;
  } catch (const dcrnn::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  }
}

int cmd_synth(const std::string& graph_path, const dcrnn::SynthOptions& opts,
              const std::string& out_path) {
  try {
    const dcrnn::WeightedDigraph g = dcrnn::load_graph(graph_path);
    const dcrnn::SpeedSeries s = dcrnn::synth_diffusion(g, opts);
    dcrnn::save_series(s, out_path);
    std::cout << "steps=" << s.steps() << "\nn=" << s.n() << "\n";
    return kExitOk;
  } catch (const dcrnn::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  }
}

dcrnn::RunConfig load_config_or_exit(const std::string& path,
                                     const std::vector<std::string>& overrides) {
  dcrnn::RunConfig cfg = dcrnn::RunConfig::load(path);
  for (const std::string& kv : overrides) {
    const std::size_t eq = kv.find('=');
    if (eq == std::string::npos) {
      throw dcrnn::Error("override must be key=value, got '" + kv + "'");
    }
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  cfg.model.input_dim = cfg.time_of_day ? 2 : 1;
  cfg.validate();
  return cfg;
}

int cmd_train(const std::string& config_path, const std::vector<std::string>& overrides) {
  dcrnn::RunConfig cfg;
  try {
    cfg = load_config_or_exit(config_path, overrides);
  } catch (const dcrnn::Error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }
  try {
    const TrainIo io = load_inputs(cfg);
    const auto train_windows = windows_for(io, cfg, io.split.train);
    const auto val_windows = windows_for(io, cfg, io.split.val);

    dcrnn::Seq2SeqModel model(cfg.model, io.graph, cfg.hyper.seed);
    dcrnn::TrainReport report;
    try {
      report = dcrnn::train(model, train_windows, val_windows, cfg.hyper);
    } catch (const dcrnn::Error& e) {
      std::cerr << "numeric failure: " << e.what() << "\n";
      return kExitNumeric;
    }

    std::filesystem::create_directories(cfg.out_dir);
    const auto report_path = cfg.out_dir / "report.csv";
    std::ofstream rep(report_path);
    rep << "epoch,train_loss,val_loss,lr,epsilon\n";
    for (std::size_t e = 0; e < report.epochs.size(); ++e) {
      const auto& s = report.epochs[e];
      rep << e << ',' << fmt(s.train_loss) << ',' << fmt(s.val_loss) << ',' << fmt(s.lr) << ','
          << fmt(s.epsilon) << '\n';
    }
    rep.close();

    const auto ckpt_path = cfg.out_dir / "best.ckpt";
    std::vector<const dcrnn::ParamTensor*> const_params;
    for (const dcrnn::ParamTensor* p : std::as_const(model).params()) const_params.push_back(p);
    dcrnn::save_checkpoint(ckpt_path, const_params);

    std::cout << "epochs=" << report.epochs.size() << "\n"
              << "best_epoch=" << report.best_epoch << "\n"
              << "best_val_loss=" << fmt(report.epochs[report.best_epoch].val_loss) << "\n"
              << "wall_seconds=" << fmt(report.wall_seconds) << "\n"
              << "report=" << report_path.string() << "\n"
              << "checkpoint=" << ckpt_path.string() << "\n";
    return kExitOk;
  } catch (const dcrnn::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  }
}

/// Restores a checkpoint into the model; shape problems exit with kExitConfig.
int restore_or_fail(dcrnn::Seq2SeqModel& model, const std::string& checkpoint_path) {
  const auto entries = dcrnn::load_checkpoint(checkpoint_path);
  dcrnn::restore_checkpoint(entries, model.params());
  return kExitOk;
}

int cmd_eval(const std::string& config_path, const std::string& checkpoint_path,
             const std::vector<std::size_t>& horizons, bool baseline_ha,
             const std::vector<std::string>& overrides) {
  dcrnn::RunConfig cfg;
  try {
    cfg = load_config_or_exit(config_path, overrides);
  } catch (const dcrnn::Error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }
  try {
    const TrainIo io = load_inputs(cfg);
    const auto test_windows = windows_for(io, cfg, io.split.test);
    if (test_windows.empty()) throw dcrnn::Error("test split yields no evaluation windows");

    dcrnn::Seq2SeqModel model(cfg.model, io.graph, cfg.hyper.seed);
    try {
      restore_or_fail(model, checkpoint_path);
    } catch (const dcrnn::Error& e) {
      std::cerr << "checkpoint mismatch: " << e.what() << "\n";
      return kExitConfig;
    }

    // Per-horizon denormalized metrics in Table layout: horizon_minutes,metric,value.
    // MAE/RMSE run over all observed entries; MAPE additionally masks zero truths.
    std::vector<dcrnn::MaskedPair> pairs(cfg.model.horizon);
    std::vector<std::vector<std::uint8_t>> mape_masks(cfg.model.horizon);
    for (const auto& sample : test_windows) {
      const auto preds = dcrnn::predict(sample, model, io.zscore);
      for (std::size_t h = 0; h < cfg.model.horizon; ++h) {
        for (std::size_t i = 0; i < preds[h].rows(); ++i) {
          if (!sample.target_mask[h][i]) continue;
          const double truth = io.zscore.invert(sample.targets[h](i, 0));
          pairs[h].truth.push_back(truth);
          pairs[h].prediction.push_back(preds[h](i, 0));
          pairs[h].mask.push_back(1);
          mape_masks[h].push_back(truth != 0.0 ? 1 : 0);
        }
      }
    }
    for (std::size_t steps : horizons) {
      if (steps < 1 || steps > cfg.model.horizon) continue;
      dcrnn::MaskedPair p = pairs[steps - 1];
      const std::size_t minutes = steps * 5;
      const double mae = dcrnn::masked_mae(p);
      const double rmse = dcrnn::masked_rmse(p);
      p.mask = mape_masks[steps - 1];
      const double mape = dcrnn::masked_mape(p) * 100.0;
      std::cout << minutes << ",mae," << fmt(mae) << "\n";
      std::cout << minutes << ",rmse," << fmt(rmse) << "\n";
      std::cout << minutes << ",mape," << fmt(mape) << "\n";
    }

    if (baseline_ha) {
      const dcrnn::HAResult ha = dcrnn::historical_average(io.series, io.split.test);
      dcrnn::MaskedPair p;
      for (std::size_t t = io.split.test.begin; t < io.split.test.end; ++t) {
        for (std::size_t i = 0; i < io.series.n(); ++i) {
          const std::size_t row = t - io.split.test.begin;
          if (!io.series.observed(t, i) || !ha.mask[row * io.series.n() + i]) continue;
          const double truth = io.series.values(t, i);
          p.truth.push_back(truth);
          p.prediction.push_back(ha.predictions(row, i));
          p.mask.push_back(truth != 0.0 ? 1 : 0);
        }
      }
      if (p.truth.empty()) {
        std::cerr << "note: historical average has no prior weeks to average; "
                     "baseline rows skipped (series shorter than the period?)\n";
      } else {
        // HA is horizon-invariant: one set of rows labelled 0.
        const double ha_mae = dcrnn::masked_mae(p);
        const double ha_rmse = dcrnn::masked_rmse(p);
        const double ha_mape = dcrnn::masked_mape(p) * 100.0;
        std::cout << "0,ha_mae," << fmt(ha_mae) << "\n";
        std::cout << "0,ha_rmse," << fmt(ha_rmse) << "\n";
        std::cout << "0,ha_mape," << fmt(ha_mape) << "\n";
      }
    }
    return kExitOk;
  } catch (const dcrnn::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  }
}

int cmd_predict(const std::string& config_path, const std::string& checkpoint_path,
                const std::string& at, const std::string& out_path,
                const std::vector<std::string>& overrides) {
  dcrnn::RunConfig cfg;
  try {
    cfg = load_config_or_exit(config_path, overrides);
  } catch (const dcrnn::Error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }
  try {
    const TrainIo io = load_inputs(cfg);
    const std::size_t history = cfg.model.history;

    std::size_t anchor;  // index of the last history step
    if (at == "last") {
      anchor = io.series.steps() - 1;
    } else {
      const std::int64_t ts = dcrnn::parse_timestamp(at);
      std::size_t idx = io.series.steps();
      for (std::size_t t = 0; t < io.series.steps(); ++t) {
        if (io.series.timestamps[t] == ts) {
          idx = t;
          break;
        }
      }
      if (idx == io.series.steps()) throw dcrnn::Error("timestamp '" + at + "' not in series");
      anchor = idx;
    }
    if (anchor + 1 < history) throw dcrnn::Error("not enough history before the anchor step");

    dcrnn::Seq2SeqModel model(cfg.model, io.graph, cfg.hyper.seed);
    try {
      restore_or_fail(model, checkpoint_path);
    } catch (const dcrnn::Error& e) {
      std::cerr << "checkpoint mismatch: " << e.what() << "\n";
      return kExitConfig;
    }

    // Pseudo-sample: inputs from the series, future auxiliary channels from
    // the (known) future timestamps; no targets.
    dcrnn::ForecastSample sample;
    const std::int64_t step_seconds = 300;
    const std::size_t n = io.series.n();
    for (std::size_t t = anchor + 1 - history; t <= anchor; ++t) {
      dcrnn::DenseMatrix f(n, cfg.model.input_dim);
      for (std::size_t i = 0; i < n; ++i) {
        f(i, 0) = io.zscore.apply(io.series.values(t, i));
        if (cfg.time_of_day) {
          const std::int64_t sod = ((io.series.timestamps[t] % 86400) + 86400) % 86400;
          f(i, 1) = static_cast<double>(sod) / 86400.0;
        }
      }
      sample.inputs.push_back(std::move(f));
    }
    for (std::size_t h = 0; h < cfg.model.horizon; ++h) {
      sample.targets.emplace_back(n, 1);
      sample.target_mask.emplace_back(n, 0);
      if (cfg.time_of_day) {
        const std::int64_t ts =
            io.series.timestamps[anchor] + static_cast<std::int64_t>(h + 1) * step_seconds;
        dcrnn::DenseMatrix aux(n, 1);
        const std::int64_t sod = ((ts % 86400) + 86400) % 86400;
        for (std::size_t i = 0; i < n; ++i) aux(i, 0) = static_cast<double>(sod) / 86400.0;
        sample.target_aux.push_back(std::move(aux));
      }
    }

    const auto preds = dcrnn::predict(sample, model, io.zscore);
    dcrnn::SpeedSeries out;
    out.node_ids = io.series.node_ids;
    out.values = dcrnn::DenseMatrix(preds.size(), n);
    out.mask.assign(preds.size() * n, 1);
    for (std::size_t h = 0; h < preds.size(); ++h) {
      out.timestamps.push_back(io.series.timestamps[anchor] +
                               static_cast<std::int64_t>(h + 1) * step_seconds);
      for (std::size_t i = 0; i < n; ++i) out.values(h, i) = preds[h](i, 0);
    }
    if (out_path.empty()) {
      std::cout << "timestamp";
      for (const auto& id : out.node_ids) std::cout << ',' << id;
      std::cout << "\n";
      for (std::size_t h = 0; h < out.steps(); ++h) {
        std::cout << dcrnn::format_timestamp(out.timestamps[h]);
        for (std::size_t i = 0; i < n; ++i) std::cout << ',' << fmt(out.values(h, i));
        std::cout << "\n";
      }
    } else {
      dcrnn::save_series(out, out_path);
      std::cout << "predictions=" << out_path << "\n";
    }
    return kExitOk;
  } catch (const dcrnn::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  }
}

int cmd_export_filter(const std::string& config_path, const std::string& checkpoint_path,
                      const std::string& node_id, char gate, std::size_t layer, std::size_t in_p,
                      std::size_t out_q, const std::string& out_path,
                      const std::vector<std::string>& overrides) {
  dcrnn::RunConfig cfg;
  try {
    cfg = load_config_or_exit(config_path, overrides);
  } catch (const dcrnn::Error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }
  try {
    const dcrnn::WeightedDigraph graph = dcrnn::load_graph(cfg.graph);
    dcrnn::Seq2SeqModel model(cfg.model, graph, cfg.hyper.seed);
    try {
      restore_or_fail(model, checkpoint_path);
      if (cfg.model.temporal_mode == dcrnn::TemporalMode::dcnn) {
        throw dcrnn::Error("filter export needs a recurrent model");
      }
      if (layer >= model.encoder_layers().size()) {
        throw dcrnn::Error("layer index out of range");
      }
    } catch (const dcrnn::Error& e) {
      std::cerr << "checkpoint mismatch: " << e.what() << "\n";
      return kExitConfig;
    }
    const auto center = graph.index_of(node_id);
    if (!center) throw dcrnn::Error("unknown node id '" + node_id + "'");
    const dcrnn::DiffusionFilter f =
        dcrnn::extract_filter(model.encoder_layers()[layer], gate, in_p, out_q);
    const auto weights = dcrnn::filter_node_weights(graph, f, *center);
    std::ostream* out = &std::cout;
    std::ofstream file;
    if (!out_path.empty()) {
      file.open(out_path);
      if (!file) throw dcrnn::Error("cannot open for writing: " + out_path);
      out = &file;
    }
    for (const auto& [id, w] : weights) *out << id << ',' << fmt(w) << "\n";
    return kExitOk;
  } catch (const dcrnn::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Diffusion-convolutional recurrent forecasting on sensor graphs"};
  app.require_subcommand(1);

  // build-graph
  std::string distances_path, nodes_path, graph_out;
  double kappa = 0.0;
  auto* build = app.add_subcommand("build-graph", "Build the sensor graph from road distances");
  build->add_option("--distances", distances_path, "Distance CSV (from_id,to_id,distance)")
      ->required();
  build->add_option("--nodes", nodes_path, "Node list, one id per line")->required();
  build->add_option("--kappa", kappa, "Distance threshold for the Gaussian kernel")->required();
  build->add_option("--out", graph_out, "Output graph path")->required();

  // synth
  std::string synth_graph, synth_out;
  dcrnn::SynthOptions synth_opts;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic diffusion series");
  synth->add_option("--graph", synth_graph, "Graph path (from build-graph)")->required();
  synth->add_option("--steps", synth_opts.steps, "Number of 5-minute steps");
  synth->add_option("--seed", synth_opts.seed, "RNG seed");
  synth->add_option("--lambda", synth_opts.lambda, "Diffusion mixing weight");
  synth->add_option("--noise-std", synth_opts.noise_std, "Gaussian noise std (mph)");
  synth->add_option("--period", synth_opts.period, "Seasonal period in steps");
  synth->add_option("--out", synth_out, "Output series CSV")->required();

  // shared train/eval/predict options
  std::string config_path, checkpoint_path, at = "last", predict_out, filter_out;
  std::vector<std::string> overrides;
  std::vector<std::size_t> horizons{3, 6, 12};
  bool baseline_ha = false;
  std::string filter_node;
  std::string gate_str = "c";
  std::size_t filter_layer = 0, filter_p = 0, filter_q = 0;

  auto* train_cmd = app.add_subcommand("train", "Train a forecasting model");
  train_cmd->add_option("--config", config_path, "Run configuration file")->required();
  train_cmd->add_option("--set", overrides, "Override config entries (key=value)");

  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on the test split");
  eval_cmd->add_option("--config", config_path, "Run configuration file")->required();
  eval_cmd->add_option("--checkpoint", checkpoint_path, "Checkpoint file")->required();
  eval_cmd->add_option("--horizons", horizons, "Horizon steps to report (default 3 6 12)");
  eval_cmd->add_flag("--baseline-ha", baseline_ha, "Also report the historical-average baseline");
  eval_cmd->add_option("--set", overrides, "Override config entries (key=value)");

  auto* predict_cmd = app.add_subcommand("predict", "Forecast from the end of a history window");
  predict_cmd->add_option("--config", config_path, "Run configuration file")->required();
  predict_cmd->add_option("--checkpoint", checkpoint_path, "Checkpoint file")->required();
  predict_cmd->add_option("--at", at, "ISO-8601 anchor timestamp, or 'last'");
  predict_cmd->add_option("--out", predict_out, "Output CSV (stdout when omitted)");
  predict_cmd->add_option("--set", overrides, "Override config entries (key=value)");

  auto* filter_cmd = app.add_subcommand("export-filter", "Export learned filter weights");
  filter_cmd->add_option("--config", config_path, "Run configuration file")->required();
  filter_cmd->add_option("--checkpoint", checkpoint_path, "Checkpoint file")->required();
  filter_cmd->add_option("--node", filter_node, "Center node id")->required();
  filter_cmd->add_option("--gate", gate_str, "Gate: r, u, or c (default c)");
  filter_cmd->add_option("--layer", filter_layer, "Encoder layer index");
  filter_cmd->add_option("--in-feature", filter_p, "Input feature index p");
  filter_cmd->add_option("--out-feature", filter_q, "Output feature index q");
  filter_cmd->add_option("--out", filter_out, "Output path (stdout when omitted)");
  filter_cmd->add_option("--set", overrides, "Override config entries (key=value)");

  CLI11_PARSE(app, argc, argv);

  if (build->parsed()) return cmd_build_graph(distances_path, nodes_path, kappa, graph_out);
  if (synth->parsed()) return cmd_synth(synth_graph, synth_opts, synth_out);
  if (train_cmd->parsed()) return cmd_train(config_path, overrides);
  if (eval_cmd->parsed()) return cmd_eval(config_path, checkpoint_path, horizons, baseline_ha, overrides);
  if (predict_cmd->parsed()) return cmd_predict(config_path, checkpoint_path, at, predict_out, overrides);
  if (filter_cmd->parsed()) {
    if (gate_str.size() != 1) {
      std::cerr << "config error: --gate must be one of r, u, c\n";
      return kExitConfig;
    }
    return cmd_export_filter(config_path, checkpoint_path, filter_node, gate_str[0], filter_layer,
                             filter_p, filter_q, filter_out, overrides);
  }
  return kExitOk;
}
