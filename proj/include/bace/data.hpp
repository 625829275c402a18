#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "bace/error.hpp"
#include "bace/rng.hpp"
#include "bace/types.hpp"

namespace bace {

// One raw sensor snapshot of one unit at one operating cycle.
struct CycleRecord {
  int unit_id = 0;
  int cycle_index = 0;  // consecutive from 1 within a unit
  Vec features;         // op settings followed by sensors
};

enum class Stage { Normal, Accelerated };

// Feature vector with clipped RUL label. x holds raw features as produced by
// the labeling step; apply_normalizer maps it into normalized space.
struct LabeledSample {
  int unit_id = 0;
  int cycle_index = 0;
  Vec x;
  double t_raw = 0;  // cycles until failure, unclipped
  double t = 0;      // min(t_raw, rul_cap), always >= 1
  Stage stage = Stage::Accelerated;
};

// Per-feature z-score transform fitted on training statistics only.
struct Normalizer {
  Vec mean;
  Vec stddev;  // floored at 1e-8

  Index dim() const { return mean.size(); }
  Vec apply(const Vec& x) const;
  Vec invert(const Vec& z) const;
};

struct SynthConfig {
  int n_units = 10;
  int min_life = 150;
  int max_life = 250;
  Index m = 8;  // feature count, >= 2
  double noise_std = 0.05;
  int rul_cap = 125;
  std::uint64_t seed = 42;

  void validate() const;
};

struct SynthData {
  std::vector<CycleRecord> train;
  std::vector<CycleRecord> test;
};

// C-MAPSS layout: whitespace-separated lines of exactly 26 numeric fields
// (unit, cycle, 3 op settings, 21 sensors), no header.
std::vector<CycleRecord> load_cmapss(const std::filesystem::path& path);

// Generic layout: comma-separated with header `unit,cycle,<feature names...>`.
std::vector<CycleRecord> load_generic_csv(const std::filesystem::path& path);

// Sniffs the first line and dispatches to one of the loaders above.
std::vector<CycleRecord> load_records(const std::filesystem::path& path);

// Labels complete run-to-failure histories: t_raw = C_end - c + 1 per unit,
// clipped at rul_cap; stage Normal iff t_raw > rul_cap.
std::vector<LabeledSample> compute_rul_labels(const std::vector<CycleRecord>& records, int rul_cap);

// Labels truncated test histories from the dataset's per-unit true-RUL file
// (one integer per line, in unit order): the file value holds at the last
// observed cycle and grows by 1 per cycle walking backwards. File values < 1
// are floored to 1 and counted in `floored_labels` when provided.
std::vector<LabeledSample> load_rul_file(const std::filesystem::path& path,
                                         const std::vector<CycleRecord>& test_records, int rul_cap,
                                         int* floored_labels = nullptr);

Normalizer fit_normalizer(const std::vector<LabeledSample>& train_samples);
std::vector<LabeledSample> apply_normalizer(const Normalizer& norm,
                                            const std::vector<LabeledSample>& samples);

std::pair<std::vector<LabeledSample>, std::vector<LabeledSample>> split_stages(
    const std::vector<LabeledSample>& samples);

// Synthetic degradation fleet for desk-scale verification: per unit a random
// integer lifetime, health h(c) = min(1, t_raw/rul_cap), and sensors that are
// fixed random linear+quadratic functions of h plus Gaussian noise. Units are
// split 80/20 into train/test.
SynthData synth_degradation(const SynthConfig& cfg);

void write_generic_csv(const std::filesystem::path& path, const std::vector<CycleRecord>& records);

}  // namespace bace
