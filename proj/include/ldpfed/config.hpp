// Copyright 2026 The ldpfed Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef LDPFED_CONFIG_HPP
#define LDPFED_CONFIG_HPP

#include <cctype>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "ldpfed/errors.hpp"
#include "ldpfed/mechanism.hpp"
#include "ldpfed/nn.hpp"
#include "ldpfed/schedule.hpp"

namespace ldpfed {

// Experiment configuration. The on-disk format is flat `section.key = value`
// lines ('#' starts a comment); every key has a default, unknown keys are
// rejected, and all validation errors name the offending key.

enum class Mode { kLdpFed, kNonPrivate, kLocalOnly };

inline Mode parse_mode(const std::string& name) {
  if (name == "ldp_fed") return Mode::kLdpFed;
  if (name == "non_private") return Mode::kNonPrivate;
  if (name == "local_only") return Mode::kLocalOnly;
  throw config_error("federation.mode: unknown mode '" + name + "'");
}

inline std::string mode_name(Mode m) {
  switch (m) {
    case Mode::kLdpFed: return "ldp_fed";
    case Mode::kNonPrivate: return "non_private";
    case Mode::kLocalOnly: return "local_only";
  }
  throw config_error("invalid mode value");
}

struct ExperimentConfig {
  // federation.*
  int clients = 10;        // N
  int selected = 3;        // k
  int rounds = 30;         // E
  Mode mode = Mode::kLdpFed;

  // train.*
  double lr = 0.05;
  int batch_size = 32;

  // model.*
  std::vector<int> layers = {32, 64, 10};
  std::string activation = "relu";

  // privacy.*
  Strategy strategy = Strategy::kProportional;
  double alpha_total = 1.0;
  int cycles = 5;
  bool cycles_explicit = false;  // set when the user assigned privacy.cycles
  double clip = 0.14;
  int precision = 6;
  bool bypass = false;          // skip the randomizer (reference arms)
  bool perturb_deltas = false;  // share update deltas instead of values

  // dataset.*
  std::string dataset_kind = "synthetic";  // synthetic | idx
  int classes = 10;
  int per_class = 500;
  int features = 32;
  double separation = 6.0;
  int test_per_class = 100;
  std::string train_images, train_labels, test_images, test_labels;
  int subset = 0;  // keep only the first n training examples (0 = all)

  // run.*
  uint64_t seed = 1;
  int seeds = 5;  // seed repetitions for comparison summaries
  std::string out = "out";
  int threads = 0;  // 0 = hardware concurrency

  // output.*
  bool timing = false;  // real wall_ms in metrics files (off keeps reruns byte-identical)

  // compare.*
  std::vector<std::string> arms = {"non_private", "local_only",   "baseline",
                                   "basic",       "single_layer", "proportional"};

  double q() const { return static_cast<double>(selected) / clients; }

  /// Cycle count a given strategy runs with: the even-rotation strategy
  /// defaults to one pass unless the user set privacy.cycles explicitly.
  int cycles_for(Strategy s) const {
    if (s == Strategy::kSingleLayer && !cycles_explicit) return 1;
    return cycles;
  }

  int effective_cycles() const { return cycles_for(strategy); }

  ArchSpec arch() const { return {layers, activation}; }

  DiscretizationSpec discretization() const { return {clip, precision}; }

  BudgetConfig budget() const { return {alpha_total, rounds, q(), effective_cycles()}; }

  void validate() const {
    if (clients < 1) throw config_error("federation.clients: must be >= 1");
    if (selected < 1) throw config_error("federation.selected: must be >= 1");
    if (selected > clients)
      throw config_error("federation.selected: constraint k <= N violated (k=" +
                         std::to_string(selected) + ", N=" + std::to_string(clients) + ")");
    if (rounds < 1) throw config_error("federation.rounds: must be >= 1");
    if (!(lr > 0.0)) throw config_error("train.lr: must be positive");
    if (batch_size < 1) throw config_error("train.batch_size: must be >= 1");
    arch().validate();
    if (!(alpha_total > 0.0)) throw config_error("privacy.alpha_total: must be positive");
    if (cycles < 1) throw config_error("privacy.cycles: must be >= 1");
    try {
      discretization().validate();
    } catch (const config_error& e) {
      throw config_error(std::string("privacy.clip/privacy.precision: ") + e.what());
    }
    if (strategy != Strategy::kBasic) {
      int ell = static_cast<int>(layers.size()) - 1;
      if (rounds / effective_cycles() < ell)
        throw config_error("federation.rounds: " + strategy_name(strategy) +
                           " needs rounds >= cycles * layers = " +
                           std::to_string(effective_cycles() * ell) + ", got " +
                           std::to_string(rounds));
    }
    if (dataset_kind == "synthetic") {
      if (classes < 2) throw config_error("dataset.classes: must be >= 2");
      if (per_class < 1) throw config_error("dataset.per_class: must be >= 1");
      if (features < 1) throw config_error("dataset.features: must be >= 1");
      if (test_per_class < 1) throw config_error("dataset.test_per_class: must be >= 1");
      if (!(separation >= 0.0)) throw config_error("dataset.separation: must be >= 0");
      if (features != layers.front())
        throw config_error("dataset.features: must equal the model input width");
    } else if (dataset_kind == "idx") {
      if (train_images.empty() || train_labels.empty() || test_images.empty() ||
          test_labels.empty())
        throw config_error(
            "dataset.train_images/train_labels/test_images/test_labels: all four "
            "paths are required when dataset.kind = idx");
    } else {
      throw config_error("dataset.kind: must be 'synthetic' or 'idx'");
    }
    if (subset < 0) throw config_error("dataset.subset: must be >= 0");
    if (seeds < 1) throw config_error("run.seeds: must be >= 1");
    if (threads < 0) throw config_error("run.threads: must be >= 0");
    if (arms.empty()) throw config_error("compare.arms: must name at least one arm");
    for (const auto& arm : arms)
      if (arm != "non_private" && arm != "local_only" && arm != "baseline" &&
          arm != "basic" && arm != "single_layer" && arm != "proportional")
        throw config_error("compare.arms: unknown arm '" + arm + "'");
  }
};

namespace config_detail {

inline std::string trim(const std::string& s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

inline int to_int(const std::string& key, const std::string& value) {
  try {
    size_t pos = 0;
    int v = std::stoi(value, &pos);
    if (pos != value.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw config_error(key + ": expected an integer, got '" + value + "'");
  }
}

inline uint64_t to_u64(const std::string& key, const std::string& value) {
  try {
    size_t pos = 0;
    uint64_t v = std::stoull(value, &pos);
    if (pos != value.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw config_error(key + ": expected an unsigned integer, got '" + value + "'");
  }
}

inline double to_double(const std::string& key, const std::string& value) {
  try {
    size_t pos = 0;
    double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw config_error(key + ": expected a number, got '" + value + "'");
  }
}

inline bool to_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw config_error(key + ": expected true/false, got '" + value + "'");
}

inline std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> items;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) items.push_back(item);
  }
  return items;
}

inline std::vector<int> to_int_list(const std::string& key, const std::string& value) {
  std::vector<int> out;
  for (const auto& item : split_list(value)) out.push_back(to_int(key, item));
  if (out.empty()) throw config_error(key + ": expected a comma-separated integer list");
  return out;
}

}  // namespace config_detail

/// Assign one key. Used by both the file parser and --set overrides.
inline void apply_setting(ExperimentConfig& cfg, const std::string& key,
                          const std::string& value) {
  using namespace config_detail;
  if (key == "federation.clients") cfg.clients = to_int(key, value);
  else if (key == "federation.selected") cfg.selected = to_int(key, value);
  else if (key == "federation.rounds") cfg.rounds = to_int(key, value);
  else if (key == "federation.mode") cfg.mode = parse_mode(value);
  else if (key == "train.lr") cfg.lr = to_double(key, value);
  else if (key == "train.batch_size") cfg.batch_size = to_int(key, value);
  else if (key == "model.layers") cfg.layers = to_int_list(key, value);
  else if (key == "model.activation") cfg.activation = value;
  else if (key == "privacy.strategy") cfg.strategy = parse_strategy(value);
  else if (key == "privacy.alpha_total") cfg.alpha_total = to_double(key, value);
  else if (key == "privacy.cycles") {
    cfg.cycles = to_int(key, value);
    cfg.cycles_explicit = true;
  } else if (key == "privacy.clip") cfg.clip = to_double(key, value);
  else if (key == "privacy.precision") cfg.precision = to_int(key, value);
  else if (key == "privacy.bypass") cfg.bypass = to_bool(key, value);
  else if (key == "privacy.perturb_deltas") cfg.perturb_deltas = to_bool(key, value);
  else if (key == "dataset.kind") cfg.dataset_kind = value;
  else if (key == "dataset.classes") cfg.classes = to_int(key, value);
  else if (key == "dataset.per_class") cfg.per_class = to_int(key, value);
  else if (key == "dataset.features") cfg.features = to_int(key, value);
  else if (key == "dataset.separation") cfg.separation = to_double(key, value);
  else if (key == "dataset.test_per_class") cfg.test_per_class = to_int(key, value);
  else if (key == "dataset.train_images") cfg.train_images = value;
  else if (key == "dataset.train_labels") cfg.train_labels = value;
  else if (key == "dataset.test_images") cfg.test_images = value;
  else if (key == "dataset.test_labels") cfg.test_labels = value;
  else if (key == "dataset.subset") cfg.subset = to_int(key, value);
  else if (key == "run.seed") cfg.seed = to_u64(key, value);
  else if (key == "run.seeds") cfg.seeds = to_int(key, value);
  else if (key == "run.out") cfg.out = value;
  else if (key == "run.threads") cfg.threads = to_int(key, value);
  else if (key == "output.timing") cfg.timing = to_bool(key, value);
  else if (key == "compare.arms") cfg.arms = split_list(value);
  else throw config_error("unknown config key '" + key + "'");
}

/// Parse a config file into defaults. Does not run cross-field validation;
/// callers apply overrides first, then call validate().
inline ExperimentConfig parse_config_text(std::istream& in, const std::string& origin) {
  ExperimentConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = config_detail::trim(line);
    if (line.empty()) continue;
    size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw config_error(origin + ":" + std::to_string(lineno) +
                         ": expected 'key = value', got '" + line + "'");
    std::string key = config_detail::trim(line.substr(0, eq));
    std::string value = config_detail::trim(line.substr(eq + 1));
    if (key.empty())
      throw config_error(origin + ":" + std::to_string(lineno) + ": empty key");
    apply_setting(cfg, key, value);
  }
  return cfg;
}

inline ExperimentConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw data_error("cannot open config file '" + path + "'");
  return parse_config_text(in, path);
}

/// Apply --set style "key=value" overrides.
inline void apply_overrides(ExperimentConfig& cfg,
                            const std::vector<std::string>& overrides) {
  for (const auto& kv : overrides) {
    size_t eq = kv.find('=');
    if (eq == std::string::npos)
      throw config_error("override '" + kv + "': expected key=value");
    apply_setting(cfg, config_detail::trim(kv.substr(0, eq)),
                  config_detail::trim(kv.substr(eq + 1)));
  }
}

}  // namespace ldpfed

#endif  // LDPFED_CONFIG_HPP
