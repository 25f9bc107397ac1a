#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "dcrnn/seq2seq.hpp"

namespace dcrnn {

/// Run configuration: paths, model fields, and training hyperparameters.
/// Parsed from a `key = value` text file (# starts a comment); command-line
/// flags override file values.
struct RunConfig {
  std::filesystem::path series;
  std::filesystem::path graph;
  std::filesystem::path out_dir = "runs/out";

  ModelConfig model;
  Hyperparams hyper;

  bool time_of_day = false;
  double missing_sentinel = 0.0;
  double split_train = 0.7;
  double split_val = 0.1;
  double split_test = 0.2;

  static RunConfig load(const std::filesystem::path& path);
  /// Applies one key=value override (same keys as the file format).
  void set(const std::string& key, const std::string& value);
  /// Checks referenced input paths and field consistency.
  void validate() const;
};

/// Writes the config back out in the file format (round-trippable).
std::string to_text(const RunConfig& c);

}  // namespace dcrnn
