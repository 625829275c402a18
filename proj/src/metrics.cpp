#include "bace/metrics.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <string>

#include "bace/format.hpp"

namespace bace {

namespace {

void check_pair(std::span<const double> pred, std::span<const double> truth) {
  if (pred.size() != truth.size()) throw ConfigError("metrics: pred/truth length mismatch");
  if (pred.empty()) throw ConfigError("metrics: empty input");
}

}  // namespace

double rmse(std::span<const double> pred, std::span<const double> truth) {
  check_pair(pred, truth);
  double sum = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - truth[i];
    sum += d * d;
  }
  return std::sqrt(sum / static_cast<double>(pred.size()));
}

double phm_score(std::span<const double> pred, std::span<const double> truth) {
  check_pair(pred, truth);
  double score = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - truth[i];
    score += d < 0 ? std::expm1(-d / 13.0) : std::expm1(d / 10.0);
  }
  if (!std::isfinite(score)) throw NumericError("phm_score overflowed to non-finite");
  return score;
}

double mape(std::span<const double> pred, std::span<const double> truth) {
  check_pair(pred, truth);
  double sum = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (truth[i] == 0.0) throw ConfigError("mape: truth contains zero (labeling contract violated)");
    sum += std::abs((pred[i] - truth[i]) / truth[i]);
  }
  return sum / static_cast<double>(pred.size()) * 100.0;
}

EvalResult evaluate(const BaceRulModel& model, const std::vector<LabeledSample>& test_samples,
                    Rng& rng, int n_samples, std::vector<EvalRow>* rows) {
  if (test_samples.empty()) throw ConfigError("evaluate: empty test set");
  std::vector<double> preds, truths;
  preds.reserve(test_samples.size());
  truths.reserve(test_samples.size());
  std::map<int, std::pair<std::size_t, double>> per_unit;  // unit -> (n, sq err sum)
  if (rows) rows->reserve(test_samples.size());

  for (const LabeledSample& s : test_samples) {
    const RulPrediction p = predict(model, s.x, rng, n_samples);
    preds.push_back(p.mean);
    truths.push_back(s.t);
    auto& agg = per_unit[s.unit_id];
    agg.first += 1;
    agg.second += (p.mean - s.t) * (p.mean - s.t);
    if (rows) rows->push_back({s.unit_id, s.cycle_index, s.t, p.mean, p.std});
  }

  EvalResult result;
  result.rmse = rmse(preds, truths);
  result.score = phm_score(preds, truths);
  result.mape = mape(preds, truths);
  result.n = preds.size();
  for (const auto& [unit, agg] : per_unit)
    result.per_unit.push_back({unit, agg.first, std::sqrt(agg.second / agg.first)});
  return result;
}

void write_eval_csv(const std::filesystem::path& path, const std::vector<EvalRow>& rows,
                    const EvalResult& result) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "unit,cycle,true_rul,pred_mean,pred_std\n";
  for (const EvalRow& r : rows)
    out << r.unit_id << ',' << r.cycle_index << ',' << format_double(r.true_rul) << ','
        << format_double(r.pred_mean) << ',' << format_double(r.pred_std) << '\n';
  out << "summary,rmse=" << format_double(result.rmse) << ",score=" << format_double(result.score)
      << ",mape=" << format_double(result.mape) << ",n=" << result.n << '\n';
  if (!out) throw DataError("failed while writing " + path.string());
}

}  // namespace bace
