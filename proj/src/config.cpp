#include "dcrnn/config.hpp"

#include <fstream>
#include <sstream>

namespace dcrnn {

namespace {

std::string strip(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

bool parse_bool(const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw Error("config: bad boolean '" + v + "'");
}

std::size_t parse_size(const std::string& v) {
  try {
    return std::stoul(v);
  } catch (...) {
    throw Error("config: bad count '" + v + "'");
  }
}

double parse_real(const std::string& v) {
  try {
    return std::stod(v);
  } catch (...) {
    throw Error("config: bad number '" + v + "'");
  }
}

}  // namespace

void RunConfig::set(const std::string& key, const std::string& value) {
  if (key == "series") series = value;
  else if (key == "graph") graph = value;
  else if (key == "out_dir") out_dir = value;
  else if (key == "history") model.history = parse_size(value);
  else if (key == "horizon") model.horizon = parse_size(value);
  else if (key == "layers") model.layers = parse_size(value);
  else if (key == "units") model.units = parse_size(value);
  else if (key == "k_max") model.k_max = parse_size(value);
  else if (key == "conv_mode") model.conv_mode = conv_mode_from_string(value);
  else if (key == "curriculum") model.curriculum = curriculum_from_string(value);
  else if (key == "temporal_mode") model.temporal_mode = temporal_mode_from_string(value);
  else if (key == "lambda_max") model.lambda_max = parse_real(value);
  else if (key == "time_of_day") time_of_day = parse_bool(value);
  else if (key == "lr") hyper.base_lr = parse_real(value);
  else if (key == "batch") hyper.batch = parse_size(value);
  else if (key == "epochs") hyper.epochs = parse_size(value);
  else if (key == "patience") hyper.patience = parse_size(value);
  else if (key == "tau") hyper.tau = parse_real(value);
  else if (key == "seed") hyper.seed = std::stoull(value);
  else if (key == "lr_start_epoch") hyper.lr_start_epoch = parse_size(value);
  else if (key == "lr_period") hyper.lr_period = parse_size(value);
  else if (key == "lr_factor") hyper.lr_factor = parse_real(value);
  else if (key == "grad_clip") hyper.grad_clip = parse_real(value);
  else if (key == "max_train_windows") hyper.max_train_windows = parse_size(value);
  else if (key == "max_val_windows") hyper.max_val_windows = parse_size(value);
  else if (key == "stop_train_loss") hyper.stop_train_loss = parse_real(value);
  else if (key == "missing_sentinel") missing_sentinel = parse_real(value);
  else if (key == "split") {
    std::istringstream ss(value);
    std::string a, b, c;
    if (!std::getline(ss, a, ',') || !std::getline(ss, b, ',') || !std::getline(ss, c)) {
      throw Error("config: split must be three comma-separated fractions");
    }
    split_train = parse_real(strip(a));
    split_val = parse_real(strip(b));
    split_test = parse_real(strip(c));
  } else {
    throw Error("config: unknown key '" + key + "'");
  }
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config: " + path.string());
  RunConfig c;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    const std::string s = strip(line);
    if (s.empty()) continue;
    const std::size_t eq = s.find('=');
    if (eq == std::string::npos) {
      throw Error("config: expected key = value at " + path.string() + ":" +
                  std::to_string(line_no));
    }
    try {
      c.set(strip(s.substr(0, eq)), strip(s.substr(eq + 1)));
    } catch (const Error& e) {
      throw Error(std::string(e.what()) + " at " + path.string() + ":" + std::to_string(line_no));
    }
  }
  // time_of_day adds the second input channel
  c.model.input_dim = c.time_of_day ? 2 : 1;
  return c;
}

void RunConfig::validate() const {
  if (series.empty()) throw Error("config: 'series' path is required");
  if (graph.empty()) throw Error("config: 'graph' path is required");
  if (!std::filesystem::exists(series)) throw Error("config: series file not found: " + series.string());
  if (!std::filesystem::exists(graph)) throw Error("config: graph file not found: " + graph.string());
  if (model.history < 1 || model.horizon < 1) throw Error("config: history/horizon must be >= 1");
  if (std::abs(split_train + split_val + split_test - 1.0) > 1e-9) {
    throw Error("config: split fractions must sum to 1");
  }
}

std::string to_text(const RunConfig& c) {
  std::ostringstream out;
  out << "series = " << c.series.string() << '\n';
  out << "graph = " << c.graph.string() << '\n';
  out << "out_dir = " << c.out_dir.string() << '\n';
  out << "history = " << c.model.history << '\n';
  out << "horizon = " << c.model.horizon << '\n';
  out << "layers = " << c.model.layers << '\n';
  out << "units = " << c.model.units << '\n';
  out << "k_max = " << c.model.k_max << '\n';
  out << "conv_mode = " << to_string(c.model.conv_mode) << '\n';
  out << "curriculum = " << to_string(c.model.curriculum) << '\n';
  out << "temporal_mode = " << to_string(c.model.temporal_mode) << '\n';
  out << "lambda_max = " << c.model.lambda_max << '\n';
  out << "time_of_day = " << (c.time_of_day ? "true" : "false") << '\n';
  out << "lr = " << c.hyper.base_lr << '\n';
  out << "batch = " << c.hyper.batch << '\n';
  out << "epochs = " << c.hyper.epochs << '\n';
  out << "patience = " << c.hyper.patience << '\n';
  out << "tau = " << c.hyper.tau << '\n';
  out << "seed = " << c.hyper.seed << '\n';
  out << "lr_start_epoch = " << c.hyper.lr_start_epoch << '\n';
  out << "lr_period = " << c.hyper.lr_period << '\n';
  out << "lr_factor = " << c.hyper.lr_factor << '\n';
  out << "grad_clip = " << c.hyper.grad_clip << '\n';
  out << "max_train_windows = " << c.hyper.max_train_windows << '\n';
  out << "max_val_windows = " << c.hyper.max_val_windows << '\n';
  out << "stop_train_loss = " << c.hyper.stop_train_loss << '\n';
  out << "missing_sentinel = " << c.missing_sentinel << '\n';
  out << "split = " << c.split_train << ',' << c.split_val << ',' << c.split_test << '\n';
  return out.str();
}

}  // namespace dcrnn
