#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "bace/model.hpp"
#include "bace/trainer.hpp"
#include "bace/types.hpp"

namespace bace {

// Flat `key = value` run configuration with `#` comments. Unknown keys are
// rejected with a nearest-key suggestion. Defaults follow the standard
// C-MAPSS settings; `profile = battery` selects the battery-style column
// (cap 550, conditional dimension 10, narrower networks) before any explicit
// key is applied. Precedence: command-line flag > file > profile > default.
struct RunConfig {
  std::string profile = "cmapss";

  // paths
  std::string dataset;
  std::string rul_file;
  std::string checkpoint;
  std::string out = "out";

  std::uint64_t seed = 42;
  int rul_cap = 125;

  // dimensions; m = 0 means "infer from the dataset"
  Index m = 0;
  Index n = 32;
  Index d_z = 10;

  double lambda11 = 1.0, lambda12 = 1.0, lambda21 = 1.0, lambda22 = 1.0;
  double learning_rate = 1e-3;
  int batch_size = 250;
  int k_ge_updates = 10;
  int d_updates = 1;
  int max_iterations = 1000;
  int patience = 20;
  double dropout_rate = 0.2;
  std::vector<Index> hidden_d{25, 25};
  std::vector<Index> hidden_e1g1{128, 256, 128};
  std::vector<Index> hidden_e2g2{50, 50, 50};
  std::string ablation = "none";  // none | no-cond | no-e2
  int n_samples = 100;

  // synthetic-fixture keys
  int synth_units = 10;
  int synth_min_life = 150;
  int synth_max_life = 250;
  Index synth_m = 8;
  double synth_noise = 0.05;

  Ablation ablation_mode() const;
  TrainConfig to_train_config() const;

  // Effective configuration as `key = value` lines, reusable as a config file.
  std::string echo() const;
};

RunConfig parse_config_file(const std::filesystem::path& path);

// Applies one `key = value` assignment; throws ConfigError on unknown keys
// (with a nearest-key suggestion) or unparsable values.
void apply_config_entry(RunConfig& cfg, const std::string& key, const std::string& value);

const std::vector<std::string>& config_keys();

}  // namespace bace
