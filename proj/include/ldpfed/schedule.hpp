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

#ifndef LDPFED_SCHEDULE_HPP
#define LDPFED_SCHEDULE_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "ldpfed/errors.hpp"

namespace ldpfed {

// Round and budget allocation. A schedule assigns every training round a set
// of layers to share and a round budget alpha_i; the per-parameter budget is
// alpha_i divided by the parameter count of the shared layers. The accountant
// totals q * alpha_i across recorded rounds (sequential composition with
// sampling amplification), which the schedules are built to make equal to the
// configured total.

enum class Strategy { kBasic, kSingleLayer, kProportional };

inline Strategy parse_strategy(const std::string& name) {
  if (name == "basic") return Strategy::kBasic;
  if (name == "single_layer") return Strategy::kSingleLayer;
  if (name == "proportional") return Strategy::kProportional;
  throw config_error("unknown schedule strategy '" + name + "'");
}

inline std::string strategy_name(Strategy s) {
  switch (s) {
    case Strategy::kBasic: return "basic";
    case Strategy::kSingleLayer: return "single_layer";
    case Strategy::kProportional: return "proportional";
  }
  throw config_error("invalid strategy value");
}

/// Budget and shape of one training run.
struct BudgetConfig {
  double alpha_total = 1.0;  // total privacy budget across the run
  int rounds = 1;            // E
  double q = 1.0;            // sampling ratio k/N
  int cycles = 5;            // c': layer rotations per run

  void validate() const {
    if (!(alpha_total > 0.0) || !std::isfinite(alpha_total))
      throw config_error("budget: alpha_total must be positive and finite");
    if (rounds < 1) throw config_error("budget: rounds must be >= 1");
    if (!(q > 0.0) || q > 1.0)
      throw config_error("budget: sampling ratio must be in (0, 1]");
    if (cycles < 1) throw config_error("budget: cycles must be >= 1");
    if (cycles > rounds)
      throw config_error("budget: cycles (" + std::to_string(cycles) +
                         ") cannot exceed rounds (" + std::to_string(rounds) + ")");
  }
};

/// What one round shares and at what budget.
struct RoundPlan {
  int round = 0;
  std::vector<std::string> layer_names;
  double alpha_round = 0.0;      // alpha_i, pre-amplification
  double alpha_per_param = 0.0;  // alpha_i / (params covered this round)
};

struct RoundSchedule {
  Strategy strategy = Strategy::kBasic;
  std::vector<RoundPlan> plans;  // length E, round r at index r
  double amplified_total = 0.0;  // sum of q * alpha_i over all plans
};

/// Total budget under composition with sampling: q * alpha_i summed term by
/// term, in round order, exactly as the accountant accumulates it.
inline double amplified_total(const std::vector<double>& alpha_rounds, double q) {
  double sum = 0.0;
  for (double a : alpha_rounds) {
    if (!(a > 0.0)) throw config_error("amplified_total: round budgets must be positive");
    sum += q * a;
  }
  return sum;
}

using LayerCounts = std::vector<std::pair<std::string, size_t>>;

namespace schedule_detail {

inline size_t total_count(const LayerCounts& layers) {
  size_t total = 0;
  for (const auto& [name, count] : layers) {
    if (count == 0) throw config_error("schedule: layer '" + name + "' has no parameters");
    total += count;
  }
  return total;
}

/// Rounds available in cycle c when E rounds are split over `cycles` blocks:
/// floor(E/cycles), with the first E mod cycles blocks one round longer.
inline int cycle_length(int rounds, int cycles, int c) {
  return rounds / cycles + (c < rounds % cycles ? 1 : 0);
}

/// Round-to-nearest shares of `slots` proportional to counts, floored at one,
/// then nudged to sum exactly: under-served layers (largest shortfall against
/// the exact quota) gain first, over-served layers shed first. Ties break
/// toward the earlier layer, so the result is deterministic.
inline std::vector<int> apportion(const std::vector<size_t>& counts, int slots) {
  size_t total = 0;
  for (size_t c : counts) total += c;
  size_t n = counts.size();

  std::vector<double> quota(n);
  std::vector<int> share(n);
  int sum = 0;
  for (size_t i = 0; i < n; ++i) {
    quota[i] = static_cast<double>(slots) * static_cast<double>(counts[i]) /
               static_cast<double>(total);
    share[i] = std::max<int>(1, static_cast<int>(std::llround(quota[i])));
    sum += share[i];
  }

  while (sum < slots) {
    size_t pick = 0;
    double best = -HUGE_VAL;
    for (size_t i = 0; i < n; ++i) {
      double shortfall = quota[i] - share[i];
      if (shortfall > best) {
        best = shortfall;
        pick = i;
      }
    }
    ++share[pick];
    ++sum;
  }
  while (sum > slots) {
    size_t pick = n;
    double best = -HUGE_VAL;
    for (size_t i = 0; i < n; ++i) {
      if (share[i] <= 1) continue;
      double excess = share[i] - quota[i];
      if (excess > best) {
        best = excess;
        pick = i;
      }
    }
    if (pick == n) throw config_error("schedule: cannot shrink shares below one round");
    --share[pick];
    --sum;
  }
  return share;
}

}  // namespace schedule_detail

/// Build the round-by-round allocation for one strategy.
///
/// basic: every round shares every layer; the round budget is
/// alpha_total / (q * E).
///
/// single_layer: each cycle's rounds are split evenly across the layers
/// (leftover rounds go to the layers scheduled first) and each round gets an
/// even slice of the cycle budget alpha_total / (q * cycles). Layers are
/// visited output side first, stepping backward through the network.
///
/// proportional: within each cycle, a layer's rounds and budget are both
/// proportional to its parameter count, with at least one round per layer;
/// its budget is then split evenly across its rounds. Backward layer order.
inline RoundSchedule build_schedule(Strategy strategy, const LayerCounts& layers,
                                    const BudgetConfig& cfg) {
  cfg.validate();
  if (layers.empty()) throw config_error("schedule: no layers");
  size_t total = schedule_detail::total_count(layers);

  RoundSchedule sched;
  sched.strategy = strategy;
  sched.plans.reserve(static_cast<size_t>(cfg.rounds));

  if (strategy == Strategy::kBasic) {
    std::vector<std::string> all_names;
    for (const auto& [name, count] : layers) all_names.push_back(name);
    double alpha_round = cfg.alpha_total / (cfg.q * cfg.rounds);
    for (int r = 0; r < cfg.rounds; ++r)
      sched.plans.push_back({r, all_names, alpha_round,
                             alpha_round / static_cast<double>(total)});
  } else {
    // Output side first: reverse of network order.
    LayerCounts backward(layers.rbegin(), layers.rend());
    int ell = static_cast<int>(backward.size());
    if (cfg.rounds / cfg.cycles < ell) {
      int needed = cfg.cycles * ell;
      throw config_error("schedule: " + strategy_name(strategy) + " needs at least " +
                         std::to_string(needed) + " rounds for " +
                         std::to_string(cfg.cycles) + " cycles over " +
                         std::to_string(ell) + " layers, but only " +
                         std::to_string(cfg.rounds) + " are configured (short by " +
                         std::to_string(needed - cfg.rounds) + ")");
    }

    double cycle_budget = cfg.alpha_total / (cfg.q * cfg.cycles);
    int round = 0;
    for (int c = 0; c < cfg.cycles; ++c) {
      int len = schedule_detail::cycle_length(cfg.rounds, cfg.cycles, c);

      std::vector<int> rounds_per_layer;
      std::vector<double> alpha_per_layer_round;
      if (strategy == Strategy::kSingleLayer) {
        int base = len / ell;
        int rem = len % ell;
        double alpha_round = cycle_budget / len;
        for (int j = 0; j < ell; ++j) {
          rounds_per_layer.push_back(base + (j < rem ? 1 : 0));
          alpha_per_layer_round.push_back(alpha_round);
        }
      } else {
        std::vector<size_t> counts;
        for (const auto& [name, count] : backward) counts.push_back(count);
        rounds_per_layer = schedule_detail::apportion(counts, len);
        for (int j = 0; j < ell; ++j) {
          double layer_budget = cycle_budget * static_cast<double>(counts[j]) /
                                static_cast<double>(total);
          alpha_per_layer_round.push_back(layer_budget / rounds_per_layer[j]);
        }
      }

      for (int j = 0; j < ell; ++j) {
        const auto& [name, count] = backward[static_cast<size_t>(j)];
        for (int k = 0; k < rounds_per_layer[j]; ++k) {
          double alpha_round = alpha_per_layer_round[static_cast<size_t>(j)];
          sched.plans.push_back({round++, {name}, alpha_round,
                                 alpha_round / static_cast<double>(count)});
        }
      }
    }
  }

  std::vector<double> alphas;
  for (const auto& plan : sched.plans) alphas.push_back(plan.alpha_round);
  sched.amplified_total = amplified_total(alphas, cfg.q);
  return sched;
}

/// Running budget total over recorded rounds. Serially owned by the
/// orchestrator; each round may be charged exactly once.
class Accountant {
 public:
  void record(const RoundPlan& plan, double q) {
    if (!recorded_.insert(plan.round).second)
      throw accounting_error("round " + std::to_string(plan.round) +
                             " already recorded");
    spent_ += q * plan.alpha_round;
  }

  double total_spent() const { return spent_; }
  size_t rounds_recorded() const { return recorded_.size(); }

 private:
  double spent_ = 0.0;
  std::set<int> recorded_;
};

}  // namespace ldpfed

#endif  // LDPFED_SCHEDULE_HPP
