#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "bace/data.hpp"
#include "bace/model.hpp"

namespace bace {

struct UnitResult {
  int unit_id = 0;
  std::size_t n = 0;
  double rmse = 0;
};

struct EvalResult {
  double rmse = 0;   // cycles
  double score = 0;  // dimensionless
  double mape = 0;   // percent
  std::size_t n = 0;
  std::vector<UnitResult> per_unit;
};

// One evaluated cycle, as emitted into the evaluation CSV.
struct EvalRow {
  int unit_id = 0;
  int cycle_index = 0;
  double true_rul = 0;
  double pred_mean = 0;
  double pred_std = 0;
};

double rmse(std::span<const double> pred, std::span<const double> truth);

// Asymmetric exponential score: exp(-d/13)-1 for early predictions (d < 0),
// exp(d/10)-1 for late ones (d >= 0), summed over all samples.
double phm_score(std::span<const double> pred, std::span<const double> truth);

// Mean absolute percentage error; requires all truth values nonzero.
double mape(std::span<const double> pred, std::span<const double> truth);

// Predicts every cycle of the test set (samples carry raw features; truth is
// the clipped label) and aggregates all three metrics plus per-unit RMSE.
EvalResult evaluate(const BaceRulModel& model, const std::vector<LabeledSample>& test_samples,
                    Rng& rng, int n_samples, std::vector<EvalRow>* rows = nullptr);

// `unit,cycle,true_rul,pred_mean,pred_std` rows plus a summary footer row.
void write_eval_csv(const std::filesystem::path& path, const std::vector<EvalRow>& rows,
                    const EvalResult& result);

}  // namespace bace
