#include "bace/commands.hpp"

#include <charconv>
#include <fstream>
#include <iostream>
#include <sstream>

#include "bace/checkpoint.hpp"
#include "bace/data.hpp"
#include "bace/format.hpp"
#include "bace/metrics.hpp"
#include "bace/trainer.hpp"

namespace bace {

namespace {

constexpr std::uint64_t kPredictStream = 0x93ED1C7;
constexpr std::uint64_t kEvalStream = 0xE7A1;

void write_manifest(const std::filesystem::path& dir, const RunConfig& cfg) {
  std::ofstream out(dir / "manifest.txt");
  if (!out) throw DataError("cannot write manifest in " + dir.string());
  out << cfg.echo();
}

std::filesystem::path prepare_out_dir(const RunConfig& cfg) {
  std::filesystem::path dir = cfg.out;
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw DataError("cannot create output directory " + dir.string());
  return dir;
}

void require_key(const std::string& value, const char* key) {
  if (value.empty()) throw ConfigError(std::string("missing required config key '") + key + "'");
}

Index checked_feature_width(const std::vector<CycleRecord>& records) {
  const Index width = records.front().features.size();
  for (const CycleRecord& r : records)
    if (r.features.size() != width) throw DataError("inconsistent feature widths in dataset");
  return width;
}

std::vector<Vec> read_feature_rows(const std::filesystem::path& path, Index m) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::string first;
  if (!std::getline(in, first)) throw DataError(path.string() + ": no input rows");
  in.close();

  std::vector<Vec> rows;
  if (first.rfind("unit,", 0) == 0) {
    for (const CycleRecord& rec : load_generic_csv(path)) rows.push_back(rec.features);
  } else {
    std::ifstream again(path);
    std::string line;
    int line_no = 0;
    while (std::getline(again, line)) {
      ++line_no;
      for (char& ch : line)
        if (ch == ',' || ch == '\t') ch = ' ';
      std::stringstream ss(line);
      std::vector<double> values;
      double v;
      while (ss >> v) values.push_back(v);
      if (values.empty()) continue;
      rows.push_back(Eigen::Map<const Vec>(values.data(), static_cast<Index>(values.size())));
    }
    if (rows.empty()) throw DataError(path.string() + ": no input rows");
  }
  for (const Vec& row : rows)
    if (row.size() != m)
      throw DataError(path.string() + ": feature width " + std::to_string(row.size()) +
                      " does not match model input width " + std::to_string(m));
  return rows;
}

}  // namespace

int exit_code_for_current_exception(std::ostream& err) {
  try {
    throw;
  } catch (const NumericError& e) {
    err << "error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const CheckpointError& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const DataError& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ShapeError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
}

int run_train(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  try {
    require_key(cfg.dataset, "dataset");
    const auto records = load_records(cfg.dataset);
    const Index width = checked_feature_width(records);
    if (cfg.m != 0 && cfg.m != width)
      throw ConfigError("config m=" + std::to_string(cfg.m) + " but dataset has " +
                        std::to_string(width) + " features");

    auto labeled = compute_rul_labels(records, cfg.rul_cap);
    const Normalizer norm = fit_normalizer(labeled);
    const auto normalized = apply_normalizer(norm, labeled);

    TrainConfig tc = cfg.to_train_config();
    tc.dims.m = width;
    auto [model, report] = train(normalized, tc);
    model.normalizer = norm;

    const auto dir = prepare_out_dir(cfg);
    const std::filesystem::path ckpt =
        cfg.checkpoint.empty() ? dir / "checkpoint.txt" : std::filesystem::path(cfg.checkpoint);
    save_checkpoint(model, ckpt);
    write_report_csv(dir / "training_report.csv", report);
    write_manifest(dir, cfg);

    const IterationLosses& last = report.iterations.back();
    out << "trained " << report.iterations.size() << " iterations ("
        << (report.stop_reason == StopReason::Patience ? "patience" : "max_iterations")
        << "), best iteration " << report.best_iteration << "\n";
    if (last.comp_ce) out << "final composite_ce = " << format_double(*last.comp_ce) << "\n";
    out << "final composite_rp = " << format_double(last.comp_rp) << "\n";
    out << "checkpoint: " << ckpt.string() << "\n";
    return kExitOk;
  } catch (...) {
    return exit_code_for_current_exception(err);
  }
}

int run_evaluate(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  try {
    require_key(cfg.checkpoint, "checkpoint");
    require_key(cfg.dataset, "dataset");
    const BaceRulModel model = load_checkpoint(cfg.checkpoint);
    const auto records = load_records(cfg.dataset);
    const Index width = checked_feature_width(records);
    if (width != model.dims.m)
      throw DataError("dataset has " + std::to_string(width) + " features but the checkpoint expects " +
                      std::to_string(model.dims.m));

    // Truth labels follow the training convention: the checkpoint's cap.
    int floored = 0;
    const auto labeled = cfg.rul_file.empty()
                             ? compute_rul_labels(records, model.dims.rul_cap)
                             : load_rul_file(cfg.rul_file, records, model.dims.rul_cap, &floored);
    if (floored > 0)
      err << "warning: " << floored << " RUL file value(s) below 1 were floored to 1\n";

    Rng rng(mix_seed(cfg.seed, kEvalStream));
    std::vector<EvalRow> rows;
    const EvalResult result = evaluate(model, labeled, rng, cfg.n_samples, &rows);

    const auto dir = prepare_out_dir(cfg);
    write_eval_csv(dir / "evaluation.csv", rows, result);
    write_manifest(dir, cfg);
    out << "rmse=" << format_double(result.rmse) << " score=" << format_double(result.score)
        << " mape=" << format_double(result.mape) << " n=" << result.n << "\n";
    return kExitOk;
  } catch (...) {
    return exit_code_for_current_exception(err);
  }
}

int run_predict(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  try {
    require_key(cfg.checkpoint, "checkpoint");
    require_key(cfg.dataset, "dataset");
    const BaceRulModel model = load_checkpoint(cfg.checkpoint);
    const auto rows = read_feature_rows(cfg.dataset, model.dims.m);

    const auto dir = prepare_out_dir(cfg);
    std::ofstream file(dir / "predictions.csv");
    if (!file) throw DataError("cannot write predictions in " + dir.string());
    file << "row,pred_mean,pred_std\n";
    out << "row,pred_mean,pred_std\n";
    // Every row draws the same latent sequence, so a prediction depends only
    // on the row's contents, not its position.
    for (std::size_t i = 0; i < rows.size(); ++i) {
      Rng rng(mix_seed(cfg.seed, kPredictStream));
      const RulPrediction p = predict(model, rows[i], rng, cfg.n_samples);
      const std::string line = std::to_string(i + 1) + "," + format_double(p.mean) + "," +
                               format_double(p.std) + "\n";
      file << line;
      out << line;
    }
    write_manifest(dir, cfg);
    return kExitOk;
  } catch (...) {
    return exit_code_for_current_exception(err);
  }
}

int run_synth(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  try {
    SynthConfig sc;
    sc.n_units = cfg.synth_units;
    sc.min_life = cfg.synth_min_life;
    sc.max_life = cfg.synth_max_life;
    sc.m = cfg.synth_m;
    sc.noise_std = cfg.synth_noise;
    sc.rul_cap = cfg.rul_cap;
    sc.seed = cfg.seed;
    const SynthData data = synth_degradation(sc);

    const auto dir = prepare_out_dir(cfg);
    write_generic_csv(dir / "synth_train.csv", data.train);
    write_generic_csv(dir / "synth_test.csv", data.test);
    write_manifest(dir, cfg);
    out << "wrote " << data.train.size() << " train and " << data.test.size()
        << " test cycles to " << dir.string() << "\n";
    return kExitOk;
  } catch (...) {
    return exit_code_for_current_exception(err);
  }
}

}  // namespace bace
