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

#ifndef LDPFED_COMPARE_HPP
#define LDPFED_COMPARE_HPP

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "ldpfed/config.hpp"
#include "ldpfed/federation.hpp"
#include "ldpfed/metrics.hpp"

namespace ldpfed {

// Side-by-side arms on identical data. Every arm of a given seed runs on the
// same shards (fingerprint-checked), so differences between arms come only
// from the protocol, not the data.

struct ArmSummary {
  std::string arm;
  std::vector<double> final_accuracies;  // one per seed
  double mean_final_accuracy = 0.0;
  double min_final_accuracy = 0.0;
  double max_final_accuracy = 0.0;
  double mean_alpha_spent = 0.0;
};

struct CompareResult {
  /// Merged per-round rows for each seed, grouped by arm in config order.
  std::vector<std::vector<MetricsRow>> per_seed_rows;
  std::vector<ArmSummary> summaries;  // config arm order
  double chance_accuracy = 0.0;       // 1 / test-set class count
};

inline CompareResult run_compare(const ExperimentConfig& cfg) {
  cfg.validate();
  CompareResult result;
  for (const auto& arm : cfg.arms) {
    ArmSummary s;
    s.arm = arm;
    result.summaries.push_back(s);
  }

  for (int s = 0; s < cfg.seeds; ++s) {
    uint64_t seed = cfg.seed + static_cast<uint64_t>(s);
    ExperimentData data = build_data(cfg, seed);
    uint64_t before = dataset_fingerprint(data.train) ^ dataset_fingerprint(data.test);
    for (const auto& shard : data.shards) before ^= dataset_fingerprint(shard);
    result.chance_accuracy = 1.0 / static_cast<double>(data.test.class_count);

    std::vector<MetricsRow> merged;
    for (size_t a = 0; a < cfg.arms.size(); ++a) {
      RunResult run = run_arm(cfg, data, cfg.arms[a], seed);
      merged.insert(merged.end(), run.rows.begin(), run.rows.end());
      result.summaries[a].final_accuracies.push_back(run.final_accuracy);
      result.summaries[a].mean_alpha_spent += run.alpha_spent;
    }

    uint64_t after = dataset_fingerprint(data.train) ^ dataset_fingerprint(data.test);
    for (const auto& shard : data.shards) after ^= dataset_fingerprint(shard);
    if (after != before)
      throw protocol_error("compare: an arm mutated the shared dataset");
    result.per_seed_rows.push_back(std::move(merged));
  }

  for (auto& s : result.summaries) {
    double sum = 0.0, mn = HUGE_VAL, mx = -HUGE_VAL;
    for (double a : s.final_accuracies) {
      sum += a;
      mn = std::min(mn, a);
      mx = std::max(mx, a);
    }
    double n = static_cast<double>(s.final_accuracies.size());
    s.mean_final_accuracy = sum / n;
    s.min_final_accuracy = mn;
    s.max_final_accuracy = mx;
    s.mean_alpha_spent /= n;
  }
  return result;
}

inline void write_summary_csv(const std::string& path,
                              const std::vector<ArmSummary>& summaries) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw data_error("cannot open '" + path + "' for writing");
  out << "arm,mean_final_accuracy,min_final_accuracy,max_final_accuracy,"
         "mean_alpha_spent\n";
  for (const auto& s : summaries)
    out << s.arm << ',' << format_double(s.mean_final_accuracy) << ','
        << format_double(s.min_final_accuracy) << ','
        << format_double(s.max_final_accuracy) << ','
        << format_double(s.mean_alpha_spent) << '\n';
  if (!out) throw data_error("write failed for '" + path + "'");
}

// ---------------------------------------------------------------------------
// Accuracy-ordering checks
// ---------------------------------------------------------------------------

struct OrderingCheck {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct OrderingReport {
  std::vector<OrderingCheck> checks;
  bool all_pass = false;
};

namespace compare_detail {

inline const ArmSummary& find_arm(const std::vector<ArmSummary>& summaries,
                                  const std::string& name) {
  for (const auto& s : summaries)
    if (s.arm == name) return s;
  throw config_error("ordering check requires arm '" + name +
                     "' in compare.arms");
}

inline std::string pct(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f%%", 100.0 * v);
  return buf;
}

}  // namespace compare_detail

/// The expected accuracy ordering of the arms, with pinned margins:
/// the non-private reference learns, spreading the budget over every
/// parameter destroys learning, and concentrating it layer by layer
/// (best: proportional to layer size) recovers most of the accuracy.
inline OrderingReport ordering_report(const CompareResult& result) {
  using compare_detail::find_arm;
  using compare_detail::pct;
  const ArmSummary& np = find_arm(result.summaries, "non_private");
  const ArmSummary& basic = find_arm(result.summaries, "basic");
  const ArmSummary& single = find_arm(result.summaries, "single_layer");
  const ArmSummary& prop = find_arm(result.summaries, "proportional");
  double chance = result.chance_accuracy;

  OrderingReport report;
  auto add = [&report](const std::string& name, bool pass, const std::string& detail) {
    report.checks.push_back({name, pass, detail});
  };

  add("non_private reaches 85%", np.mean_final_accuracy >= 0.85,
      "non_private = " + pct(np.mean_final_accuracy));
  add("proportional within 2 points of single_layer",
      prop.mean_final_accuracy >= single.mean_final_accuracy - 0.02,
      "proportional = " + pct(prop.mean_final_accuracy) + ", single_layer = " +
          pct(single.mean_final_accuracy));
  add("single_layer beats basic by 10 points",
      single.mean_final_accuracy >= basic.mean_final_accuracy + 0.10,
      "single_layer = " + pct(single.mean_final_accuracy) + ", basic = " +
          pct(basic.mean_final_accuracy));
  add("basic within 15 points of chance",
      std::abs(basic.mean_final_accuracy - chance) <= 0.15,
      "basic = " + pct(basic.mean_final_accuracy) + ", chance = " + pct(chance));
  add("non_private >= proportional >= each private arm",
      np.mean_final_accuracy >= prop.mean_final_accuracy &&
          prop.mean_final_accuracy >= single.mean_final_accuracy &&
          prop.mean_final_accuracy >= basic.mean_final_accuracy,
      "non_private = " + pct(np.mean_final_accuracy) + ", proportional = " +
          pct(prop.mean_final_accuracy) + ", single_layer = " +
          pct(single.mean_final_accuracy) + ", basic = " +
          pct(basic.mean_final_accuracy));

  report.all_pass = true;
  for (const auto& c : report.checks) report.all_pass = report.all_pass && c.pass;
  return report;
}

// ---------------------------------------------------------------------------
// Cycle-count sweep
// ---------------------------------------------------------------------------

struct CycleRow {
  int requested = 0;
  int effective = 0;  // clamped so every cycle still covers every layer
  double mean_final_accuracy = 0.0;
};

/// Proportional-strategy accuracy across cycle counts. Counts too large for
/// the round budget are clamped to the largest feasible value and reported
/// with both numbers.
inline std::vector<CycleRow> cycles_sweep(const ExperimentConfig& base,
                                          const std::vector<int>& cycle_counts) {
  base.validate();
  int ell = static_cast<int>(base.layers.size()) - 1;
  int max_cycles = base.rounds / ell;

  std::vector<CycleRow> rows;
  for (int requested : cycle_counts) {
    if (requested < 1) throw config_error("cycles sweep: counts must be >= 1");
    CycleRow row;
    row.requested = requested;
    row.effective = std::min(requested, max_cycles);

    ExperimentConfig cfg = base;
    cfg.cycles = row.effective;
    cfg.cycles_explicit = true;
    double sum = 0.0;
    for (int s = 0; s < cfg.seeds; ++s) {
      uint64_t seed = cfg.seed + static_cast<uint64_t>(s);
      ExperimentData data = build_data(cfg, seed);
      sum += run_arm(cfg, data, "proportional", seed).final_accuracy;
    }
    row.mean_final_accuracy = sum / static_cast<double>(cfg.seeds);
    rows.push_back(row);
  }
  return rows;
}

inline void write_cycles_csv(const std::string& path, const std::vector<CycleRow>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw data_error("cannot open '" + path + "' for writing");
  out << "requested_cycles,effective_cycles,mean_final_accuracy\n";
  for (const auto& r : rows)
    out << r.requested << ',' << r.effective << ','
        << format_double(r.mean_final_accuracy) << '\n';
  if (!out) throw data_error("write failed for '" + path + "'");
}

}  // namespace ldpfed

#endif  // LDPFED_COMPARE_HPP
