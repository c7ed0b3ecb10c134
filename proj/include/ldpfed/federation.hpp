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

#ifndef LDPFED_FEDERATION_HPP
#define LDPFED_FEDERATION_HPP

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <exception>
#include <numeric>
#include <string>
#include <thread>
#include <vector>

#include "ldpfed/config.hpp"
#include "ldpfed/dataset.hpp"
#include "ldpfed/errors.hpp"
#include "ldpfed/mechanism.hpp"
#include "ldpfed/metrics.hpp"
#include "ldpfed/nn.hpp"
#include "ldpfed/rng.hpp"
#include "ldpfed/schedule.hpp"

namespace ldpfed {

// Protocol engine. Each round: the server broadcasts the scheduled layers,
// every client trains one local epoch and submits a (possibly randomized)
// update for those layers, the server keeps k of the N updates, averages
// them, and overwrites the scheduled slice of the global model. Rounds commit
// atomically: an error anywhere leaves the previous round's state intact.
// All randomness is drawn from substreams keyed by (seed, round, actor), so
// results do not depend on client completion order or thread count.

/// Exactly k distinct client ids, uniform over all size-k subsets, sorted.
inline std::vector<int> select_k(int n, int k, Stream& rng) {
  if (k < 1 || k > n)
    throw config_error("select_k: need 1 <= k <= N, got k=" + std::to_string(k) +
                       ", N=" + std::to_string(n));
  std::vector<int> ids(static_cast<size_t>(n));
  std::iota(ids.begin(), ids.end(), 0);
  rng.shuffle(ids);
  ids.resize(static_cast<size_t>(k));
  std::sort(ids.begin(), ids.end());
  return ids;
}

/// Train and test sets plus the per-client shards, built once per seed and
/// shared read-only by every arm.
struct ExperimentData {
  Dataset train;
  Dataset test;
  std::vector<Dataset> shards;
};

inline ExperimentData build_data(const ExperimentConfig& cfg, uint64_t seed) {
  ExperimentData d;
  if (cfg.dataset_kind == "synthetic") {
    d.train = synth_dataset(cfg.classes, cfg.per_class, cfg.features, cfg.separation,
                            seed, 0);
    d.test = synth_dataset(cfg.classes, cfg.test_per_class, cfg.features,
                           cfg.separation, seed, 1);
  } else {
    d.train = load_idx(cfg.train_images, cfg.train_labels);
    d.test = load_idx(cfg.test_images, cfg.test_labels);
  }
  if (cfg.subset > 0 && static_cast<size_t>(cfg.subset) < d.train.size()) {
    d.train.features.resize(static_cast<size_t>(cfg.subset) * d.train.width);
    d.train.labels.resize(static_cast<size_t>(cfg.subset));
  }
  d.shards = partition(d.train, cfg.clients, seed);
  return d;
}

/// Stable fingerprint of a dataset's bits, for cross-arm shard checks.
inline uint64_t dataset_fingerprint(const Dataset& d) {
  uint64_t h = 0xcbf29ce484222325ull;
  auto mix = [&h](uint64_t v) {
    h ^= v;
    h *= 0x100000001b3ull;
  };
  mix(d.width);
  mix(static_cast<uint64_t>(d.class_count));
  for (double f : d.features) {
    uint64_t bits;
    std::memcpy(&bits, &f, sizeof(bits));
    mix(bits);
  }
  for (int l : d.labels) mix(static_cast<uint64_t>(static_cast<int64_t>(l)));
  return h;
}

struct RunSpec {
  Mode mode = Mode::kLdpFed;
  Strategy strategy = Strategy::kProportional;
  bool bypass = false;          // skip discretize + randomize, send raw values
  std::string arm;              // label written into the metrics rows
  bool capture_params = false;  // record the global parameter vector per round
};

struct RunResult {
  std::vector<MetricsRow> rows;
  double final_accuracy = 0.0;
  double final_loss = 0.0;
  double alpha_spent = 0.0;
  Model global;
  std::vector<std::vector<double>> param_history;  // filled when capture_params
};

namespace fed_detail {

/// Run fn(0..n-1) across up to `threads` workers (0 = hardware concurrency).
/// The lowest-index exception wins, so failures are deterministic too.
template <typename Fn>
inline void for_each_client(int n, int threads, Fn&& fn) {
  int workers = threads == 0 ? static_cast<int>(std::thread::hardware_concurrency())
                             : threads;
  workers = std::max(1, std::min(workers, n));
  if (workers == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(static_cast<size_t>(n));
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (int i = w; i < n; i += workers) {
        try {
          fn(i);
        } catch (...) {
          errors[static_cast<size_t>(i)] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
}

inline double elapsed_ms(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                   start)
      .count();
}

}  // namespace fed_detail

/// The federated round loop (private protocol and its non-private bypass).
inline RunResult run_federated(const ExperimentConfig& cfg, const ExperimentData& data,
                               const RunSpec& spec, uint64_t seed) {
  ArchSpec arch = cfg.arch();
  arch.validate();
  if (data.train.width != static_cast<size_t>(arch.input_width()))
    throw shape_error("dataset width " + std::to_string(data.train.width) +
                      " does not match model input width " +
                      std::to_string(arch.input_width()));
  if (data.train.class_count > arch.output_width())
    throw shape_error("dataset has more classes than model outputs");
  if (static_cast<int>(data.shards.size()) != cfg.clients)
    throw protocol_error("shard count does not match client count");

  DiscretizationSpec disc = cfg.discretization();
  disc.validate();
  bool bypass = spec.bypass || spec.mode == Mode::kNonPrivate;
  Strategy strat =
      spec.mode == Mode::kNonPrivate ? Strategy::kBasic : spec.strategy;

  Model global = init_model(arch, seed);
  LayerCounts layers = layer_partition(global);
  BudgetConfig budget{cfg.alpha_total, cfg.rounds, cfg.q(), cfg.cycles_for(strat)};
  RoundSchedule sched = build_schedule(strat, layers, budget);

  int n = cfg.clients;
  std::vector<Model> clients(static_cast<size_t>(n), global);
  Accountant acct;
  RunResult res;

  for (int r = 0; r < cfg.rounds; ++r) {
    auto start = std::chrono::steady_clock::now();
    const RoundPlan& plan = sched.plans[static_cast<size_t>(r)];

    std::vector<LayerSegment> segs;
    size_t update_len = 0;
    for (const auto& name : plan.layer_names) {
      segs.push_back(global.params.segment(name));
      update_len += segs.back().length;
    }

    // Broadcast values for the scheduled layers, concatenated in plan order.
    std::vector<double> broadcast(update_len);
    {
      size_t at = 0;
      for (const auto& seg : segs) {
        std::copy_n(global.params.values.data() + seg.offset, seg.length,
                    broadcast.data() + at);
        at += seg.length;
      }
    }

    // Stage the round on copies; nothing below mutates live state.
    std::vector<Model> next = clients;
    std::vector<std::vector<double>> raw(static_cast<size_t>(n));
    std::vector<std::vector<int64_t>> grid(static_cast<size_t>(n));

    fed_detail::for_each_client(n, cfg.threads, [&](int i) {
      try {
        Model& m = next[static_cast<size_t>(i)];
        size_t at = 0;
        for (const auto& seg : segs) {
          std::copy_n(broadcast.data() + at, seg.length,
                      m.params.values.data() + seg.offset);
          at += seg.length;
        }
        m = train_one_epoch(std::move(m), data.shards[static_cast<size_t>(i)],
                            cfg.lr, cfg.batch_size);

        std::vector<double> vals(update_len);
        at = 0;
        for (const auto& seg : segs) {
          std::copy_n(m.params.values.data() + seg.offset, seg.length,
                      vals.data() + at);
          at += seg.length;
        }
        if (cfg.perturb_deltas)
          for (size_t j = 0; j < update_len; ++j) vals[j] -= broadcast[j];

        if (bypass) {
          raw[static_cast<size_t>(i)] = std::move(vals);
        } else {
          EmMechanism mech(plan.alpha_per_param, disc.universe_bound());
          Stream rng(derive_seed(seed, {stream_tag::kClient, static_cast<uint64_t>(r),
                                        static_cast<uint64_t>(i)}));
          grid[static_cast<size_t>(i)] = perturb_values(vals, disc, mech, rng);
        }
      } catch (const numeric_error& e) {
        throw numeric_error("client " + std::to_string(i) + ": " + e.what());
      }
    });

    Stream server_rng(
        derive_seed(seed, {stream_tag::kServer, static_cast<uint64_t>(r)}));
    std::vector<int> chosen = select_k(n, cfg.selected, server_rng);

    // Average the k accepted updates; summation follows sorted client ids.
    std::vector<double> agg(update_len, 0.0);
    if (bypass) {
      for (int id : chosen) {
        const auto& v = raw[static_cast<size_t>(id)];
        for (size_t j = 0; j < update_len; ++j) agg[j] += v[j];
      }
      for (size_t j = 0; j < update_len; ++j)
        agg[j] /= static_cast<double>(chosen.size());
    } else {
      std::vector<std::vector<int64_t>> picks;
      picks.reserve(chosen.size());
      for (int id : chosen) picks.push_back(grid[static_cast<size_t>(id)]);
      agg = aggregate(picks, disc);
    }

    Model new_global = global;
    {
      size_t at = 0;
      for (const auto& seg : segs) {
        double* dst = new_global.params.values.data() + seg.offset;
        if (cfg.perturb_deltas)
          for (size_t j = 0; j < seg.length; ++j) dst[j] += agg[at + j];
        else
          std::copy_n(agg.data() + at, seg.length, dst);
        at += seg.length;
      }
    }
    EvalResult ev = evaluate(new_global, data.test);

    // Commit.
    if (!bypass) acct.record(plan, budget.q);
    clients = std::move(next);
    global = std::move(new_global);
    double wall = cfg.timing ? fed_detail::elapsed_ms(start) : 0.0;
    res.rows.push_back(
        {r, spec.arm, ev.accuracy, ev.loss, bypass ? 0.0 : acct.total_spent(), wall});
    if (spec.capture_params) res.param_history.push_back(global.params.values);
  }

  res.final_accuracy = res.rows.back().test_accuracy;
  res.final_loss = res.rows.back().test_loss;
  res.alpha_spent = acct.total_spent();
  res.global = std::move(global);
  return res;
}

/// Every client trains alone; the reported metric is the plain average of the
/// clients' test accuracies. No parameters move, no budget is spent.
inline RunResult run_local_only(const ExperimentConfig& cfg, const ExperimentData& data,
                                const RunSpec& spec, uint64_t seed) {
  ArchSpec arch = cfg.arch();
  arch.validate();
  int n = cfg.clients;
  Model base = init_model(arch, seed);
  std::vector<Model> clients(static_cast<size_t>(n), base);
  std::vector<double> acc(static_cast<size_t>(n)), loss(static_cast<size_t>(n));

  RunResult res;
  for (int r = 0; r < cfg.rounds; ++r) {
    auto start = std::chrono::steady_clock::now();
    std::vector<Model> next = clients;
    fed_detail::for_each_client(n, cfg.threads, [&](int i) {
      try {
        next[static_cast<size_t>(i)] =
            train_one_epoch(std::move(next[static_cast<size_t>(i)]),
                            data.shards[static_cast<size_t>(i)], cfg.lr,
                            cfg.batch_size);
        EvalResult ev = evaluate(next[static_cast<size_t>(i)], data.test);
        acc[static_cast<size_t>(i)] = ev.accuracy;
        loss[static_cast<size_t>(i)] = ev.loss;
      } catch (const numeric_error& e) {
        throw numeric_error("client " + std::to_string(i) + ": " + e.what());
      }
    });
    clients = std::move(next);
    double mean_acc = std::accumulate(acc.begin(), acc.end(), 0.0) / n;
    double mean_loss = std::accumulate(loss.begin(), loss.end(), 0.0) / n;
    double wall = cfg.timing ? fed_detail::elapsed_ms(start) : 0.0;
    res.rows.push_back({r, spec.arm, mean_acc, mean_loss, 0.0, wall});
  }
  res.final_accuracy = res.rows.back().test_accuracy;
  res.final_loss = res.rows.back().test_loss;
  res.global = std::move(base);
  return res;
}

/// Random-guess reference: constant chance accuracy, uniform-prediction loss.
inline RunResult run_baseline(const ExperimentConfig& cfg, const ExperimentData& data,
                              const std::string& arm) {
  double chance = 1.0 / static_cast<double>(data.test.class_count);
  double loss = std::log(static_cast<double>(data.test.class_count));
  RunResult res;
  for (int r = 0; r < cfg.rounds; ++r)
    res.rows.push_back({r, arm, chance, loss, 0.0, 0.0});
  res.final_accuracy = chance;
  res.final_loss = loss;
  return res;
}

/// One comparison arm by name, on shared data.
inline RunResult run_arm(const ExperimentConfig& cfg, const ExperimentData& data,
                         const std::string& arm, uint64_t seed) {
  if (arm == "baseline") return run_baseline(cfg, data, arm);
  RunSpec spec;
  spec.arm = arm;
  if (arm == "local_only") {
    spec.mode = Mode::kLocalOnly;
    return run_local_only(cfg, data, spec, seed);
  }
  if (arm == "non_private") {
    spec.mode = Mode::kNonPrivate;
    spec.bypass = true;
    return run_federated(cfg, data, spec, seed);
  }
  spec.mode = Mode::kLdpFed;
  spec.strategy = parse_strategy(arm);
  return run_federated(cfg, data, spec, seed);
}

/// The `run` entry point: build data for the configured seed, dispatch on
/// mode. A bypassed run is labeled non_private, which is what it is.
inline RunResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  ExperimentData data = build_data(cfg, cfg.seed);
  RunSpec spec;
  spec.mode = cfg.mode;
  spec.strategy = cfg.strategy;
  spec.bypass = cfg.bypass;
  switch (cfg.mode) {
    case Mode::kLocalOnly:
      spec.arm = "local_only";
      return run_local_only(cfg, data, spec, cfg.seed);
    case Mode::kNonPrivate:
      spec.arm = "non_private";
      return run_federated(cfg, data, spec, cfg.seed);
    case Mode::kLdpFed:
      spec.arm = cfg.bypass ? "non_private" : strategy_name(cfg.strategy);
      return run_federated(cfg, data, spec, cfg.seed);
  }
  throw config_error("invalid mode value");
}

}  // namespace ldpfed

#endif  // LDPFED_FEDERATION_HPP
