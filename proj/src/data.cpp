#include "bace/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "bace/format.hpp"

namespace bace {

namespace {

constexpr int kCmapssFields = 26;  // unit, cycle, 3 op settings, 21 sensors

double parse_number(std::string_view token, const std::filesystem::path& path, int line_no) {
  double value = 0;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc() || ptr != token.data() + token.size() || !std::isfinite(value))
    throw DataError(path.string() + ":" + std::to_string(line_no) + ": non-numeric field '" +
                    std::string(token) + "'");
  return value;
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

std::vector<std::string_view> split_char(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::ifstream open_or_throw(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return in;
}

}  // namespace

Vec Normalizer::apply(const Vec& x) const {
  if (x.size() != mean.size()) throw ShapeError("normalizer: feature width mismatch");
  return ((x - mean).array() / stddev.array()).matrix();
}

Vec Normalizer::invert(const Vec& z) const {
  if (z.size() != mean.size()) throw ShapeError("normalizer: feature width mismatch");
  return (z.array() * stddev.array()).matrix() + mean;
}

void SynthConfig::validate() const {
  if (n_units < 1) throw ConfigError("synth: n_units must be >= 1");
  if (min_life < 1 || min_life > max_life)
    throw ConfigError("synth: need 1 <= min_life <= max_life");
  if (m < 2) throw ConfigError("synth: m must be >= 2");
  if (noise_std < 0) throw ConfigError("synth: noise_std must be >= 0");
  if (rul_cap < 1) throw ConfigError("synth: rul_cap must be >= 1");
}

std::vector<CycleRecord> load_cmapss(const std::filesystem::path& path) {
  std::ifstream in = open_or_throw(path);
  std::vector<CycleRecord> records;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto fields = split_ws(line);
    if (fields.empty()) continue;
    if (fields.size() != kCmapssFields)
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                      std::to_string(kCmapssFields) + " fields, got " +
                      std::to_string(fields.size()));
    CycleRecord rec;
    rec.unit_id = static_cast<int>(parse_number(fields[0], path, line_no));
    rec.cycle_index = static_cast<int>(parse_number(fields[1], path, line_no));
    rec.features.resize(kCmapssFields - 2);
    for (int i = 2; i < kCmapssFields; ++i)
      rec.features[i - 2] = parse_number(fields[i], path, line_no);
    records.push_back(std::move(rec));
  }
  if (records.empty()) throw ConfigError(path.string() + ": file contains no records");
  return records;
}

std::vector<CycleRecord> load_generic_csv(const std::filesystem::path& path) {
  std::ifstream in = open_or_throw(path);
  std::string line;
  if (!std::getline(in, line)) throw ConfigError(path.string() + ": file contains no records");
  auto header = split_char(line, ',');
  if (header.size() < 3 || trim(header[0]) != "unit" || trim(header[1]) != "cycle")
    throw DataError(path.string() + ":1: expected header 'unit,cycle,<features...>'");
  const std::size_t n_cols = header.size();
  std::vector<CycleRecord> records;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto fields = split_char(line, ',');
    if (fields.size() != n_cols)
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                      std::to_string(n_cols) + " fields, got " + std::to_string(fields.size()));
    CycleRecord rec;
    rec.unit_id = static_cast<int>(parse_number(trim(fields[0]), path, line_no));
    rec.cycle_index = static_cast<int>(parse_number(trim(fields[1]), path, line_no));
    rec.features.resize(static_cast<Index>(n_cols - 2));
    for (std::size_t i = 2; i < n_cols; ++i)
      rec.features[static_cast<Index>(i - 2)] = parse_number(trim(fields[i]), path, line_no);
    records.push_back(std::move(rec));
  }
  if (records.empty()) throw ConfigError(path.string() + ": file contains no records");
  return records;
}

std::vector<CycleRecord> load_records(const std::filesystem::path& path) {
  std::ifstream in = open_or_throw(path);
  std::string first;
  if (!std::getline(in, first)) throw ConfigError(path.string() + ": file contains no records");
  in.close();
  if (first.rfind("unit,", 0) == 0) return load_generic_csv(path);
  return load_cmapss(path);
}

namespace {

// Groups records by unit, preserving first-appearance order, and checks the
// cycle run is consecutive from 1.
std::vector<std::pair<int, std::vector<const CycleRecord*>>> group_units(
    const std::vector<CycleRecord>& records) {
  std::vector<std::pair<int, std::vector<const CycleRecord*>>> units;
  std::map<int, std::size_t> slot;
  for (const CycleRecord& rec : records) {
    auto [it, inserted] = slot.try_emplace(rec.unit_id, units.size());
    if (inserted) units.push_back({rec.unit_id, {}});
    units[it->second].second.push_back(&rec);
  }
  for (auto& [unit, recs] : units) {
    std::sort(recs.begin(), recs.end(),
              [](const CycleRecord* a, const CycleRecord* b) { return a->cycle_index < b->cycle_index; });
    for (std::size_t i = 0; i < recs.size(); ++i) {
      if (recs[i]->cycle_index != static_cast<int>(i) + 1)
        throw DataError("unit " + std::to_string(unit) + ": cycle indices are not consecutive from 1 (found " +
                        std::to_string(recs[i]->cycle_index) + " at position " + std::to_string(i + 1) + ")");
    }
  }
  return units;
}

LabeledSample make_sample(const CycleRecord& rec, double t_raw, int rul_cap) {
  LabeledSample s;
  s.unit_id = rec.unit_id;
  s.cycle_index = rec.cycle_index;
  s.x = rec.features;
  s.t_raw = t_raw;
  s.t = std::min(t_raw, static_cast<double>(rul_cap));
  s.stage = t_raw > rul_cap ? Stage::Normal : Stage::Accelerated;
  return s;
}

}  // namespace

std::vector<LabeledSample> compute_rul_labels(const std::vector<CycleRecord>& records, int rul_cap) {
  if (rul_cap < 1) throw ConfigError("rul_cap must be >= 1");
  if (records.empty()) throw ConfigError("compute_rul_labels: no records");
  auto units = group_units(records);
  std::vector<LabeledSample> samples;
  samples.reserve(records.size());
  for (const auto& [unit, recs] : units) {
    const double c_end = static_cast<double>(recs.size());
    for (const CycleRecord* rec : recs)
      samples.push_back(make_sample(*rec, c_end - rec->cycle_index + 1.0, rul_cap));
  }
  return samples;
}

std::vector<LabeledSample> load_rul_file(const std::filesystem::path& path,
                                         const std::vector<CycleRecord>& test_records, int rul_cap,
                                         int* floored_labels) {
  if (test_records.empty()) throw ConfigError("load_rul_file: no test records");
  std::ifstream in = open_or_throw(path);
  std::vector<double> values;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto t = trim(line);
    if (t.empty()) continue;
    values.push_back(parse_number(t, path, line_no));
  }
  auto units = group_units(test_records);
  if (values.size() != units.size())
    throw ConfigError(path.string() + ": " + std::to_string(values.size()) +
                      " RUL values for " + std::to_string(units.size()) + " test units");
  int floored = 0;
  std::vector<LabeledSample> samples;
  samples.reserve(test_records.size());
  for (std::size_t u = 0; u < units.size(); ++u) {
    const auto& recs = units[u].second;
    double rul_at_end = values[u];
    if (rul_at_end < 1.0) {
      rul_at_end = 1.0;
      ++floored;
    }
    const int c_obs = recs.back()->cycle_index;
    for (const CycleRecord* rec : recs)
      samples.push_back(make_sample(*rec, rul_at_end + (c_obs - rec->cycle_index), rul_cap));
  }
  if (floored_labels) *floored_labels = floored;
  return samples;
}

Normalizer fit_normalizer(const std::vector<LabeledSample>& train_samples) {
  if (train_samples.size() < 2) throw ConfigError("fit_normalizer: need at least 2 samples");
  const Index dim = train_samples.front().x.size();
  Vec mean = Vec::Zero(dim);
  for (const LabeledSample& s : train_samples) {
    if (s.x.size() != dim) throw ShapeError("fit_normalizer: inconsistent feature widths");
    mean += s.x;
  }
  mean /= static_cast<double>(train_samples.size());
  Vec var = Vec::Zero(dim);
  for (const LabeledSample& s : train_samples) var += (s.x - mean).array().square().matrix();
  var /= static_cast<double>(train_samples.size());
  Normalizer norm;
  norm.mean = std::move(mean);
  norm.stddev = var.array().sqrt().max(1e-8).matrix();
  return norm;
}

std::vector<LabeledSample> apply_normalizer(const Normalizer& norm,
                                            const std::vector<LabeledSample>& samples) {
  std::vector<LabeledSample> out = samples;
  for (LabeledSample& s : out) s.x = norm.apply(s.x);
  return out;
}

std::pair<std::vector<LabeledSample>, std::vector<LabeledSample>> split_stages(
    const std::vector<LabeledSample>& samples) {
  std::pair<std::vector<LabeledSample>, std::vector<LabeledSample>> out;
  for (const LabeledSample& s : samples)
    (s.stage == Stage::Normal ? out.first : out.second).push_back(s);
  return out;
}

SynthData synth_degradation(const SynthConfig& cfg) {
  cfg.validate();
  Rng rng(mix_seed(cfg.seed, 0x5EEDDA7Aull));

  // One shared sensor response for the whole fleet: feature j follows
  // a_j + b_j*h + q_j*h^2 over health h, plus per-cycle Gaussian noise. The
  // coefficient scale is set so the default noise_std leaves a moderate
  // signal-to-noise ratio per feature; health is still well determined when
  // the features are combined.
  Vec offset(cfg.m), lin(cfg.m), quad(cfg.m);
  for (Index j = 0; j < cfg.m; ++j) {
    offset[j] = rng.uniform(-1.0, 1.0);
    lin[j] = rng.uniform(-0.3, 0.3);
    quad[j] = rng.uniform(-0.3, 0.3);
  }

  const int n_test = std::max(1, cfg.n_units / 5);
  const int n_train = std::max(1, cfg.n_units - n_test);

  SynthData data;
  for (int unit = 1; unit <= cfg.n_units; ++unit) {
    const int life =
        cfg.min_life + static_cast<int>(rng.index(static_cast<std::size_t>(cfg.max_life - cfg.min_life + 1)));
    auto& sink = unit <= n_train ? data.train : data.test;
    for (int cycle = 1; cycle <= life; ++cycle) {
      const double t_raw = static_cast<double>(life - cycle + 1);
      const double h = std::min(1.0, t_raw / cfg.rul_cap);
      CycleRecord rec;
      rec.unit_id = unit;
      rec.cycle_index = cycle;
      rec.features.resize(cfg.m);
      for (Index j = 0; j < cfg.m; ++j) {
        double noise = cfg.noise_std > 0 ? rng.normal(0.0, cfg.noise_std) : 0.0;
        rec.features[j] = offset[j] + lin[j] * h + quad[j] * h * h + noise;
      }
      sink.push_back(std::move(rec));
    }
  }
  return data;
}

void write_generic_csv(const std::filesystem::path& path, const std::vector<CycleRecord>& records) {
  if (records.empty()) throw ConfigError("write_generic_csv: no records");
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  const Index m = records.front().features.size();
  out << "unit,cycle";
  for (Index j = 0; j < m; ++j) out << ",s" << (j + 1);
  out << "\n";
  for (const CycleRecord& rec : records) {
    out << rec.unit_id << "," << rec.cycle_index;
    for (Index j = 0; j < m; ++j) out << "," << format_double(rec.features[j]);
    out << "\n";
  }
  if (!out) throw DataError("failed while writing " + path.string());
}

}  // namespace bace
