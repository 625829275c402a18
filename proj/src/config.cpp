#include "bace/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include "bace/format.hpp"

namespace bace {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

long long parse_int(const std::string& key, const std::string& value) {
  long long v = 0;
  auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || p != value.data() + value.size())
    throw ConfigError("config key '" + key + "': expected an integer, got '" + value + "'");
  return v;
}

double parse_real(const std::string& key, const std::string& value) {
  double v = 0;
  auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || p != value.data() + value.size())
    throw ConfigError("config key '" + key + "': expected a number, got '" + value + "'");
  return v;
}

std::vector<Index> parse_widths(const std::string& key, const std::string& value) {
  std::vector<Index> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) throw ConfigError("config key '" + key + "': empty width in '" + value + "'");
    out.push_back(static_cast<Index>(parse_int(key, item)));
  }
  if (out.empty()) throw ConfigError("config key '" + key + "': no widths in '" + value + "'");
  return out;
}

std::string widths_to_string(const std::vector<Index>& widths) {
  std::string out;
  for (std::size_t i = 0; i < widths.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(widths[i]);
  }
  return out;
}

std::size_t edit_distance(const std::string& a, const std::string& b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

struct KeyHandler {
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

const std::vector<std::pair<std::string, KeyHandler>>& key_table() {
  auto int_key = [](auto member) {
    return KeyHandler{
        [member](RunConfig& c, const std::string& v) {
          c.*member = static_cast<std::remove_reference_t<decltype(std::declval<RunConfig&>().*member)>>(
              parse_int("", v));
        },
        [member](const RunConfig& c) { return std::to_string(c.*member); }};
  };
  auto real_key = [](auto member) {
    return KeyHandler{
        [member](RunConfig& c, const std::string& v) { c.*member = parse_real("", v); },
        [member](const RunConfig& c) { return format_double(c.*member); }};
  };
  auto string_key = [](auto member) {
    return KeyHandler{[member](RunConfig& c, const std::string& v) { c.*member = v; },
                      [member](const RunConfig& c) { return c.*member; }};
  };
  auto widths_key = [](auto member) {
    return KeyHandler{
        [member](RunConfig& c, const std::string& v) { c.*member = parse_widths("", v); },
        [member](const RunConfig& c) { return widths_to_string(c.*member); }};
  };
  static const std::vector<std::pair<std::string, KeyHandler>> table = {
      {"profile", string_key(&RunConfig::profile)},
      {"dataset", string_key(&RunConfig::dataset)},
      {"rul_file", string_key(&RunConfig::rul_file)},
      {"checkpoint", string_key(&RunConfig::checkpoint)},
      {"out", string_key(&RunConfig::out)},
      {"seed", int_key(&RunConfig::seed)},
      {"rul_cap", int_key(&RunConfig::rul_cap)},
      {"m", int_key(&RunConfig::m)},
      {"n", int_key(&RunConfig::n)},
      {"d_z", int_key(&RunConfig::d_z)},
      {"lambda11", real_key(&RunConfig::lambda11)},
      {"lambda12", real_key(&RunConfig::lambda12)},
      {"lambda21", real_key(&RunConfig::lambda21)},
      {"lambda22", real_key(&RunConfig::lambda22)},
      {"learning_rate", real_key(&RunConfig::learning_rate)},
      {"batch_size", int_key(&RunConfig::batch_size)},
      {"k_ge_updates", int_key(&RunConfig::k_ge_updates)},
      {"d_updates", int_key(&RunConfig::d_updates)},
      {"max_iterations", int_key(&RunConfig::max_iterations)},
      {"patience", int_key(&RunConfig::patience)},
      {"dropout_rate", real_key(&RunConfig::dropout_rate)},
      {"hidden_d", widths_key(&RunConfig::hidden_d)},
      {"hidden_e1g1", widths_key(&RunConfig::hidden_e1g1)},
      {"hidden_e2g2", widths_key(&RunConfig::hidden_e2g2)},
      {"ablation", string_key(&RunConfig::ablation)},
      {"n_samples", int_key(&RunConfig::n_samples)},
      {"synth_units", int_key(&RunConfig::synth_units)},
      {"synth_min_life", int_key(&RunConfig::synth_min_life)},
      {"synth_max_life", int_key(&RunConfig::synth_max_life)},
      {"synth_m", int_key(&RunConfig::synth_m)},
      {"synth_noise", real_key(&RunConfig::synth_noise)},
  };
  return table;
}

void apply_profile(RunConfig& cfg, const std::string& profile) {
  if (profile == "cmapss") return;  // base defaults
  if (profile == "battery") {
    cfg.rul_cap = 550;
    cfg.n = 10;
    cfg.hidden_d = {16, 16};
    cfg.hidden_e1g1 = {32, 32, 32};
    cfg.hidden_e2g2 = {32, 32, 32};
    return;
  }
  throw ConfigError("unknown profile '" + profile + "' (expected cmapss or battery)");
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> out;
    for (const auto& [key, handler] : key_table()) out.push_back(key);
    return out;
  }();
  return keys;
}

void apply_config_entry(RunConfig& cfg, const std::string& key, const std::string& value) {
  for (const auto& [name, handler] : key_table()) {
    if (name == key) {
      try {
        handler.set(cfg, value);
      } catch (const ConfigError& e) {
        std::string msg = e.what();
        // re-fill the key name dropped by the generic parsers
        if (msg.find("config key ''") == 0)
          msg = "config key '" + key + "'" + msg.substr(std::string("config key ''").size());
        throw ConfigError(msg);
      }
      if (key == "profile") apply_profile(cfg, value);
      return;
    }
  }
  std::size_t best = std::string::npos;
  std::string suggestion;
  for (const std::string& name : config_keys()) {
    const std::size_t d = edit_distance(key, name);
    if (d < best) {
      best = d;
      suggestion = name;
    }
  }
  throw ConfigError("unknown config key '" + key + "' (did you mean '" + suggestion + "'?)");
}

RunConfig parse_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  RunConfig cfg;
  std::string line;
  int line_no = 0;

  // Pass 1: the profile selects its defaults before any other key applies,
  // regardless of where it appears in the file.
  std::vector<std::pair<std::string, std::string>> entries;
  while (std::getline(in, line)) {
    ++line_no;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    std::size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path.string() + ":" + std::to_string(line_no) +
                        ": expected 'key = value'");
    entries.emplace_back(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
  }
  for (const auto& [key, value] : entries)
    if (key == "profile") apply_config_entry(cfg, key, value);
  for (const auto& [key, value] : entries)
    if (key != "profile") apply_config_entry(cfg, key, value);
  return cfg;
}

Ablation RunConfig::ablation_mode() const {
  if (ablation == "none") return Ablation::None;
  if (ablation == "no-cond") return Ablation::NoConditionalSpace;
  if (ablation == "no-e2") return Ablation::NoEncoderE2;
  throw ConfigError("unknown ablation '" + ablation + "' (expected none, no-cond or no-e2)");
}

TrainConfig RunConfig::to_train_config() const {
  TrainConfig tc;
  tc.weights = {lambda11, lambda12, lambda21, lambda22};
  tc.learning_rate = learning_rate;
  tc.batch_size = batch_size;
  tc.k_ge_updates = k_ge_updates;
  tc.d_updates = d_updates;
  tc.max_iterations = max_iterations;
  tc.patience = patience;
  tc.dims = {m, n, d_z, rul_cap};
  tc.widths = {hidden_d, hidden_e1g1, hidden_e2g2};
  tc.dropout_rate = dropout_rate;
  tc.seed = seed;
  tc.ablation = ablation_mode();
  return tc;
}

std::string RunConfig::echo() const {
  std::string out;
  for (const auto& [key, handler] : key_table())
    out += key + " = " + handler.get(*this) + "\n";
  return out;
}

}  // namespace bace
