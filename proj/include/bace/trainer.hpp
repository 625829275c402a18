#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "bace/adam.hpp"
#include "bace/data.hpp"
#include "bace/losses.hpp"
#include "bace/model.hpp"

namespace bace {

struct TrainConfig {
  LossWeights weights;
  double learning_rate = 1e-3;
  int batch_size = 250;
  int k_ge_updates = 10;  // generator/encoder steps per iteration, >= 2
  int d_updates = 1;      // discriminator steps per iteration
  int max_iterations = 1000;
  int patience = 20;   // stop evaluations without improvement before stopping
  int eval_every = 10; // iterations between stop evaluations
  int stop_window = 10;
  Dimensions dims;
  NetworkWidths widths;
  double dropout_rate = 0.2;
  std::uint64_t seed = 0;
  Ablation ablation = Ablation::None;

  void validate() const;
};

// Loss values of one iteration, each phase evaluated in eval mode on its own
// batch at the moment the batch is drawn (before that phase's updates).
// CE-phase fields are absent under NoConditionalSpace; recon2 is absent under
// NoEncoderE2.
struct IterationLosses {
  std::optional<double> d1;
  std::optional<double> e1g1;
  std::optional<double> recon1;
  double d2 = 0;
  double e2g2 = 0;
  std::optional<double> recon2;
  double dist = 0;
  std::optional<double> comp_ce;
  double comp_rp = 0;
  double dist_hinge = 0;  // normal-stage hinge term of the distortion loss
};

enum class StopReason { Patience, MaxIterations };

struct TrainReport {
  std::vector<IterationLosses> iterations;
  StopReason stop_reason = StopReason::MaxIterations;
  int best_iteration = 0;  // 1-based iteration whose checkpoint was returned
};

struct AdamCounters {
  long d1 = 0, e1 = 0, g1 = 0, d2 = 0, e2 = 0, g2 = 0;
};

// Drives one training run and exposes single-iteration stepping so the phase
// discipline and update ratios can be inspected. train() below is the
// everyday entry point.
class Trainer {
 public:
  // train_data must be normalized; labels stay in cycles and are scaled
  // internally. Requires at least one Accelerated sample.
  Trainer(std::vector<LabeledSample> train_data, TrainConfig cfg);

  // One full iteration: CE phase (D1 once per d_update, then E1/G1 k times),
  // then RP phase (D2, then E2/G2), then the eval-mode loss record.
  void step();

  // Stop bookkeeping for the completed iterations; returns true when training
  // should halt. Updates the best-checkpoint snapshot.
  bool should_stop();

  const BaceRulModel& model() const { return model_; }
  const TrainConfig& config() const { return cfg_; }
  const BaceRulModel& best_model() const;
  const std::vector<IterationLosses>& history() const { return history_; }
  int iteration() const { return iteration_; }
  int best_iteration() const { return best_iteration_; }
  StopReason stop_reason() const { return stop_reason_; }
  AdamCounters adam_counters() const;

  // The batches the trainer draws for a given 1-based iteration. Batch
  // contents depend only on (seed, iteration) and, for the RP batch, on the
  // current E1 parameters, so the most recent iteration can be replayed.
  CeBatch make_ce_batch(int iteration) const;
  RpBatch make_rp_batch(int iteration) const;

  // The two halves of one iteration, exposed so the parameter-group
  // discipline can be observed; step() is the normal driver.
  void ce_phase(const CeBatch& batch);
  void rp_phase(const RpBatch& batch);

 private:
  void record_ce(IterationLosses& rec, const CeBatch& batch) const;
  void record_rp(IterationLosses& rec, const RpBatch& batch) const;
  double stop_signal(const IterationLosses& rec) const;

  std::vector<LabeledSample> data_;
  std::vector<std::size_t> accel_idx_;
  std::vector<std::size_t> normal_idx_;
  TrainConfig cfg_;
  BaceRulModel model_;
  BaceRulModel best_model_;
  bool has_best_ = false;
  AdamState<double> adam_e1_, adam_g1_, adam_d1_, adam_e2_, adam_g2_, adam_d2_;
  Rng dropout_rng_;
  std::vector<IterationLosses> history_;
  int iteration_ = 0;
  int best_iteration_ = 0;
  double best_signal_ = std::numeric_limits<double>::infinity();
  int stalled_evals_ = 0;
  StopReason stop_reason_ = StopReason::MaxIterations;
};

// Runs the alternating optimization to completion and returns the best
// checkpoint (by the stop signal's moving average) plus the loss history.
std::pair<BaceRulModel, TrainReport> train(const std::vector<LabeledSample>& train_data,
                                           const TrainConfig& cfg);

// One row per iteration, columns = the nine loss fields; absent values are
// left empty.
void write_report_csv(const std::filesystem::path& path, const TrainReport& report);

}  // namespace bace
