#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "bace/commands.hpp"
#include "bace/data.hpp"
#include "bace/metrics.hpp"

using namespace bace;

namespace {

namespace fs = std::filesystem;

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

RunConfig small_run_config(const fs::path& out) {
  RunConfig cfg;
  cfg.out = out.string();
  cfg.seed = 21;
  cfg.rul_cap = 25;
  cfg.synth_units = 3;
  cfg.synth_min_life = 30;
  cfg.synth_max_life = 40;
  cfg.synth_m = 4;
  cfg.synth_noise = 0.05;
  cfg.n = 6;
  cfg.d_z = 2;
  cfg.hidden_d = {4};
  cfg.hidden_e1g1 = {6};
  cfg.hidden_e2g2 = {6};
  cfg.batch_size = 8;
  cfg.k_ge_updates = 2;
  cfg.max_iterations = 2;
  cfg.n_samples = 4;
  return cfg;
}

}  // namespace

TEST_CASE("synth command writes parseable fixtures and an exact replay manifest") {
  TempDir dir("bace_cli_synth");
  auto cfg = small_run_config(dir.path);
  std::ostringstream out, err;
  REQUIRE(run_synth(cfg, out, err) == kExitOk);
  REQUIRE(fs::exists(dir.path / "synth_train.csv"));
  REQUIRE(fs::exists(dir.path / "synth_test.csv"));
  REQUIRE(fs::exists(dir.path / "manifest.txt"));

  auto train = load_generic_csv(dir.path / "synth_train.csv");
  auto test = load_generic_csv(dir.path / "synth_test.csv");
  std::set<int> units;
  for (const auto& r : train) units.insert(r.unit_id);
  for (const auto& r : test) units.insert(r.unit_id);
  CHECK(units.size() == 3);

  // the manifest is itself a config; replaying it reproduces the files
  TempDir replay_dir("bace_cli_synth_replay");
  auto replay_cfg = parse_config_file(dir.path / "manifest.txt");
  replay_cfg.out = replay_dir.path.string();
  REQUIRE(run_synth(replay_cfg, out, err) == kExitOk);
  CHECK(slurp(replay_dir.path / "synth_train.csv") == slurp(dir.path / "synth_train.csv"));
  CHECK(slurp(replay_dir.path / "synth_test.csv") == slurp(dir.path / "synth_test.csv"));
}

TEST_CASE("train command errors name the missing key and exit with usage status") {
  TempDir dir("bace_cli_missing");
  auto cfg = small_run_config(dir.path);
  std::ostringstream out, err;
  CHECK(run_train(cfg, out, err) == kExitUsage);
  CHECK(err.str().find("dataset") != std::string::npos);
}

TEST_CASE("train/evaluate/predict pipeline over the synthetic fixture") {
  TempDir dir("bace_cli_pipeline");
  auto cfg = small_run_config(dir.path);
  std::ostringstream out, err;
  REQUIRE(run_synth(cfg, out, err) == kExitOk);

  cfg.dataset = (dir.path / "synth_train.csv").string();
  cfg.checkpoint = (dir.path / "model.txt").string();
  REQUIRE(run_train(cfg, out, err) == kExitOk);
  REQUIRE(fs::exists(dir.path / "model.txt"));
  REQUIRE(fs::exists(dir.path / "training_report.csv"));

  // byte-identical checkpoints across reruns with the same config and seed
  TempDir dir2("bace_cli_pipeline2");
  auto cfg2 = cfg;
  cfg2.out = dir2.path.string();
  cfg2.checkpoint = (dir2.path / "model.txt").string();
  REQUIRE(run_train(cfg2, out, err) == kExitOk);
  CHECK(slurp(dir.path / "model.txt") == slurp(dir2.path / "model.txt"));
  CHECK(slurp(dir.path / "training_report.csv") == slurp(dir2.path / "training_report.csv"));

  // evaluate: one CSV row per cycle plus a summary footer matching a recompute
  auto eval_cfg = cfg;
  eval_cfg.dataset = (dir.path / "synth_test.csv").string();
  std::ostringstream eval_out;
  REQUIRE(run_evaluate(eval_cfg, eval_out, err) == kExitOk);
  const auto test_records = load_generic_csv(dir.path / "synth_test.csv");

  std::ifstream csv(dir.path / "evaluation.csv");
  std::string line;
  std::getline(csv, line);
  CHECK(line == "unit,cycle,true_rul,pred_mean,pred_std");
  std::vector<double> preds, truths;
  std::string summary;
  while (std::getline(csv, line)) {
    if (line.rfind("summary,", 0) == 0) {
      summary = line;
      break;
    }
    std::stringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    REQUIRE(cells.size() == 5);
    truths.push_back(std::stod(cells[2]));
    preds.push_back(std::stod(cells[3]));
  }
  CHECK(preds.size() == test_records.size());
  REQUIRE(!summary.empty());
  auto field = [&](const std::string& key) {
    auto at = summary.find(key + "=");
    REQUIRE(at != std::string::npos);
    auto end = summary.find(',', at);
    return std::stod(summary.substr(at + key.size() + 1, end - at - key.size() - 1));
  };
  CHECK(field("rmse") == doctest::Approx(rmse(preds, truths)).epsilon(1e-12));
  CHECK(field("score") == doctest::Approx(phm_score(preds, truths)).epsilon(1e-12));
  CHECK(field("mape") == doctest::Approx(mape(preds, truths)).epsilon(1e-12));

  // predict: row-for-row output, reproducible, and position-independent
  auto pred_cfg = cfg;
  pred_cfg.dataset = (dir.path / "rows.csv").string();
  {
    std::ofstream rows(dir.path / "rows.csv");
    const auto& a = test_records[0].features;
    const auto& b = test_records[1].features;
    for (const Vec* v : {&a, &b}) {
      for (Index i = 0; i < v->size(); ++i) rows << (i ? "," : "") << (*v)[i];
      rows << "\n";
    }
  }
  std::ostringstream pred_out1;
  REQUIRE(run_predict(pred_cfg, pred_out1, err) == kExitOk);
  std::ostringstream pred_out2;
  REQUIRE(run_predict(pred_cfg, pred_out2, err) == kExitOk);
  CHECK(pred_out1.str() == pred_out2.str());

  // swap the two rows: the per-row numbers must move with their rows
  {
    std::ofstream rows(dir.path / "rows.csv");
    const auto& a = test_records[1].features;
    const auto& b = test_records[0].features;
    for (const Vec* v : {&a, &b}) {
      for (Index i = 0; i < v->size(); ++i) rows << (i ? "," : "") << (*v)[i];
      rows << "\n";
    }
  }
  std::ostringstream pred_out3;
  REQUIRE(run_predict(pred_cfg, pred_out3, err) == kExitOk);
  auto lines = [](const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string l;
    while (std::getline(ss, l)) out.push_back(l);
    return out;
  };
  auto l1 = lines(pred_out1.str());
  auto l3 = lines(pred_out3.str());
  REQUIRE(l1.size() == 3);
  REQUIRE(l3.size() == 3);
  // row indices differ but the (mean,std) payloads are exchanged
  CHECK(l1[1].substr(2) == l3[2].substr(2));
  CHECK(l1[2].substr(2) == l3[1].substr(2));
}

TEST_CASE("numeric divergence maps to the numeric exit code") {
  TempDir dir("bace_cli_numeric");
  auto cfg = small_run_config(dir.path);
  std::ostringstream out, err;
  REQUIRE(run_synth(cfg, out, err) == kExitOk);
  cfg.dataset = (dir.path / "synth_train.csv").string();
  cfg.learning_rate = 1e200;
  cfg.max_iterations = 10;
  CHECK(run_train(cfg, out, err) == kExitNumeric);
  CHECK(err.str().find("iteration") != std::string::npos);
}

TEST_CASE("evaluate rejects checkpoint/dataset width mismatches with a data exit code") {
  TempDir dir("bace_cli_mismatch");
  auto cfg = small_run_config(dir.path);
  std::ostringstream out, err;
  REQUIRE(run_synth(cfg, out, err) == kExitOk);
  cfg.dataset = (dir.path / "synth_train.csv").string();
  cfg.checkpoint = (dir.path / "model.txt").string();
  REQUIRE(run_train(cfg, out, err) == kExitOk);

  auto wide_cfg = cfg;
  wide_cfg.synth_m = 6;
  wide_cfg.out = (dir.path / "wide").string();
  REQUIRE(run_synth(wide_cfg, out, err) == kExitOk);
  auto eval_cfg = cfg;
  eval_cfg.dataset = (dir.path / "wide" / "synth_test.csv").string();
  CHECK(run_evaluate(eval_cfg, out, err) == kExitData);

  auto bad_ckpt_cfg = cfg;
  bad_ckpt_cfg.checkpoint = (dir.path / "nonexistent.txt").string();
  bad_ckpt_cfg.dataset = (dir.path / "synth_test.csv").string();
  CHECK(run_evaluate(bad_ckpt_cfg, out, err) == kExitData);
}
