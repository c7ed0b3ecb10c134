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

// Command-line front end: run experiments, compare arms, inspect mechanisms
// and schedules, and self-check the core invariants. Data goes to stdout and
// the output directory; diagnostics go to stderr. Exit codes: 0 success,
// 1 runtime/assertion failure, 2 configuration, 3 data/format, 4 numeric.

#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ldpfed/ldpfed.hpp"

namespace fs = std::filesystem;

namespace {

struct CommonFlags {
  std::string config_path;
  std::vector<std::string> sets;
  std::string out;
  std::optional<uint64_t> seed;
  std::optional<int> threads;
};

void add_common_flags(CLI::App* cmd, CommonFlags* flags) {
  cmd->add_option("--config", flags->config_path, "Config file path");
  cmd->add_option("--set", flags->sets, "Override a config key (key=value, repeatable)");
  cmd->add_option("--out", flags->out, "Output directory (env LDPFED_OUT wins)");
  cmd->add_option("--seed", flags->seed, "Master seed (overrides run.seed)");
  cmd->add_option("--threads", flags->threads,
                  "Worker thread cap (overrides run.threads; 0 = hardware)");
}

ldpfed::ExperimentConfig resolve_config(const CommonFlags& flags) {
  ldpfed::ExperimentConfig cfg;
  if (!flags.config_path.empty()) cfg = ldpfed::parse_config(flags.config_path);
  ldpfed::apply_overrides(cfg, flags.sets);
  if (flags.seed) cfg.seed = *flags.seed;
  if (flags.threads) cfg.threads = *flags.threads;
  if (!flags.out.empty()) cfg.out = flags.out;
  if (const char* env = std::getenv("LDPFED_OUT"); env != nullptr && *env != '\0')
    cfg.out = env;
  cfg.validate();
  return cfg;
}

int cmd_run(const CommonFlags& flags) {
  ldpfed::ExperimentConfig cfg = resolve_config(flags);
  ldpfed::RunResult res = ldpfed::run_experiment(cfg);
  fs::create_directories(cfg.out);
  ldpfed::write_metrics_jsonl((fs::path(cfg.out) / "metrics.jsonl").string(), res.rows);
  ldpfed::write_metrics_csv((fs::path(cfg.out) / "metrics.csv").string(), res.rows);
  std::cout << "final_accuracy " << ldpfed::format_double(res.final_accuracy) << '\n'
            << "alpha_spent " << ldpfed::format_double(res.alpha_spent) << '\n';
  std::cerr << "wrote metrics.jsonl and metrics.csv to " << cfg.out << '\n';
  return 0;
}

int cmd_compare(const CommonFlags& flags, bool assert_ordering,
                const std::vector<int>& sweep_cycles) {
  ldpfed::ExperimentConfig cfg = resolve_config(flags);
  fs::create_directories(cfg.out);

  if (!sweep_cycles.empty()) {
    std::vector<ldpfed::CycleRow> rows = ldpfed::cycles_sweep(cfg, sweep_cycles);
    ldpfed::write_cycles_csv((fs::path(cfg.out) / "cycles_sweep.csv").string(), rows);
    std::cout << "requested_cycles effective_cycles mean_final_accuracy\n";
    for (const auto& r : rows)
      std::cout << r.requested << ' ' << r.effective << ' '
                << ldpfed::format_double(r.mean_final_accuracy) << '\n';
    return 0;
  }

  ldpfed::CompareResult result = ldpfed::run_compare(cfg);
  for (size_t s = 0; s < result.per_seed_rows.size(); ++s) {
    std::string stem = "compare_seed" + std::to_string(s);
    ldpfed::write_metrics_jsonl((fs::path(cfg.out) / (stem + ".jsonl")).string(),
                                result.per_seed_rows[s]);
    ldpfed::write_metrics_csv((fs::path(cfg.out) / (stem + ".csv")).string(),
                              result.per_seed_rows[s]);
  }
  ldpfed::write_summary_csv((fs::path(cfg.out) / "summary.csv").string(),
                            result.summaries);
  std::cout << "arm mean_final_accuracy min max mean_alpha_spent\n";
  for (const auto& s : result.summaries)
    std::cout << s.arm << ' ' << ldpfed::format_double(s.mean_final_accuracy) << ' '
              << ldpfed::format_double(s.min_final_accuracy) << ' '
              << ldpfed::format_double(s.max_final_accuracy) << ' '
              << ldpfed::format_double(s.mean_alpha_spent) << '\n';

  if (assert_ordering) {
    ldpfed::OrderingReport report = ldpfed::ordering_report(result);
    for (const auto& c : report.checks)
      std::cout << (c.pass ? "ok   " : "FAIL ") << c.name << " (" << c.detail << ")\n";
    if (!report.all_pass) {
      std::cerr << "accuracy ordering assertion failed\n";
      return 1;
    }
  }
  return 0;
}

int cmd_inspect_mechanism(double clip, int precision, double alpha, double value) {
  ldpfed::DiscretizationSpec disc{clip, precision};
  disc.validate();
  ldpfed::EmMechanism mech(alpha, disc.universe_bound());
  int64_t g = ldpfed::discretize(value, disc);
  std::cout << "universe_size " << mech.universe_size() << '\n';
  std::cout << "grid_point " << g << '\n';
  try {
    std::vector<double> p = mech.pmf(g);
    int64_t bound = mech.universe_bound();
    for (int64_t y = -bound; y <= bound; ++y)
      std::cout << y << '\t' << ldpfed::format_double(p[static_cast<size_t>(y + bound)])
                << '\n';
  } catch (const ldpfed::capacity_error&) {
    // Too large to materialize: report the mode and how much mass sits
    // outside a +/-10 grid-step window instead.
    double window = 0.0;
    int64_t bound = mech.universe_bound();
    for (int64_t y = std::max(-bound, g - 10); y <= std::min(bound, g + 10); ++y)
      window += mech.pmf_at(g, y);
    std::cout << "mode " << g << ' ' << ldpfed::format_double(mech.pmf_at(g, g)) << '\n';
    std::cout << "tail_mass_beyond_10 " << ldpfed::format_double(1.0 - window) << '\n';
  }
  try {
    ldpfed::CldpReport report = mech.verify_cldp_bound();
    std::cout << "max_ratio_slack " << ldpfed::format_double(report.max_slack) << '\n';
  } catch (const ldpfed::capacity_error&) {
    std::cerr << "ratio audit skipped: universe too large for the exhaustive check\n";
  }
  return 0;
}

int cmd_inspect_schedule(const CommonFlags& flags) {
  ldpfed::ExperimentConfig cfg = resolve_config(flags);
  ldpfed::ArchSpec arch = cfg.arch();
  arch.validate();
  ldpfed::LayerCounts layers;
  for (const auto& seg : ldpfed::make_layout(arch)) layers.emplace_back(seg.name, seg.length);
  ldpfed::RoundSchedule sched =
      ldpfed::build_schedule(cfg.strategy, layers, cfg.budget());
  for (const auto& plan : sched.plans) {
    std::string names;
    for (size_t i = 0; i < plan.layer_names.size(); ++i) {
      if (i) names += ',';
      names += plan.layer_names[i];
    }
    std::cout << plan.round << '\t' << names << '\t'
              << ldpfed::format_double(plan.alpha_round) << '\t'
              << ldpfed::format_double(plan.alpha_per_param) << '\n';
  }
  return 0;
}

// ---------------------------------------------------------------------------
// selftest
// ---------------------------------------------------------------------------

void check(bool cond, const std::string& msg) {
  if (!cond) throw ldpfed::error(msg);
}

void selftest_pmf_sums() {
  for (double alpha : {0.1, 2.0}) {
    ldpfed::EmMechanism mech(alpha, 10);
    for (int64_t v = -10; v <= 10; ++v) {
      double sum = 0.0;
      for (double p : mech.pmf(v)) sum += p;
      check(std::abs(sum - 1.0) < 1e-9, "pmf does not sum to 1 at v=" +
                                            std::to_string(v));
    }
  }
}

void selftest_ratio_bound() {
  ldpfed::CldpReport report = ldpfed::EmMechanism(0.5, 50).verify_cldp_bound();
  check(report.satisfied, "ratio bound violated, slack " +
                              ldpfed::format_double(report.max_slack));
}

void selftest_sampler_matches_pmf() {
  ldpfed::EmMechanism mech(2.0, 1);
  ldpfed::Stream rng(123);
  const int draws = 200000;
  double counts[3] = {0, 0, 0};
  for (int i = 0; i < draws; ++i) counts[mech.sample(0, rng) + 1] += 1.0;
  std::vector<double> p = mech.pmf(0);
  double tv = 0.0;
  for (int i = 0; i < 3; ++i) tv += std::abs(counts[i] / draws - p[static_cast<size_t>(i)]);
  tv /= 2.0;
  check(tv < 0.01, "sampler deviates from pmf, tv " + ldpfed::format_double(tv));
}

void selftest_gradient_check() {
  ldpfed::Dataset ds = ldpfed::synth_dataset(2, 3, 3, 2.0, 42);
  ldpfed::Model m = ldpfed::init_model({{3, 4, 2}}, 7);
  ldpfed::Minibatch batch = ldpfed::make_minibatch(ds, 0, ds.size());
  ldpfed::ParameterVector grad = ldpfed::minibatch_gradient(m, batch);

  size_t total = m.params.values.size();
  const double h = 1e-6;
  for (size_t idx : {size_t{0}, total / 3, 2 * total / 3, total - 1}) {
    ldpfed::Model plus = m, minus = m;
    plus.params.values[idx] += h;
    minus.params.values[idx] -= h;
    double fd =
        (ldpfed::average_loss(plus, ds) - ldpfed::average_loss(minus, ds)) / (2 * h);
    double an = grad.values[idx];
    check(std::abs(fd - an) <= 1e-6 + 1e-4 * std::abs(an),
          "gradient mismatch at index " + std::to_string(idx) + ": analytic " +
              ldpfed::format_double(an) + ", finite-difference " +
              ldpfed::format_double(fd));
  }
}

void selftest_budget_conservation() {
  ldpfed::LayerCounts layers = {{"dense0", 2112}, {"dense1", 650}};
  for (auto strat : {ldpfed::Strategy::kBasic, ldpfed::Strategy::kSingleLayer,
                     ldpfed::Strategy::kProportional}) {
    ldpfed::BudgetConfig budget{1.0, 30, 0.3, strat == ldpfed::Strategy::kBasic ? 1 : 5};
    ldpfed::RoundSchedule sched = ldpfed::build_schedule(strat, layers, budget);
    check(std::abs(sched.amplified_total - 1.0) < 1e-9,
          ldpfed::strategy_name(strat) + " budget drifts: " +
              ldpfed::format_double(sched.amplified_total));
  }
}

void selftest_discretize_round_trip() {
  ldpfed::DiscretizationSpec disc{1.0, 2};
  for (double x : {0.123456, -0.005, 0.9999, 1.5, -2.0, 0.0}) {
    double clamped = std::min(std::max(x, -1.0), 1.0);
    double back = ldpfed::undiscretize(ldpfed::discretize(x, disc), disc);
    check(std::abs(back - clamped) <= 0.005 + 1e-12,
          "round trip off at x=" + ldpfed::format_double(x));
  }
}

void selftest_partition_covers() {
  ldpfed::Dataset ds = ldpfed::synth_dataset(5, 21, 4, 3.0, 9);
  std::vector<ldpfed::Dataset> shards = ldpfed::partition(ds, 7, 11);
  size_t total = 0;
  uint64_t whole = 0, pieces = 0;
  for (size_t i = 0; i < ds.size(); ++i)
    whole += ldpfed::dataset_fingerprint(
        {ds.width,
         {ds.features.begin() + i * ds.width, ds.features.begin() + (i + 1) * ds.width},
         {ds.labels[i]},
         ds.class_count});
  for (const auto& shard : shards) {
    total += shard.size();
    for (size_t i = 0; i < shard.size(); ++i)
      pieces += ldpfed::dataset_fingerprint({shard.width,
                                             {shard.features.begin() + i * shard.width,
                                              shard.features.begin() + (i + 1) * shard.width},
                                             {shard.labels[i]},
                                             shard.class_count});
  }
  check(total == ds.size(), "shards lose or duplicate examples");
  check(whole == pieces, "shard union differs from the original multiset");
}

void selftest_selection_exact_k() {
  ldpfed::Stream rng(77);
  int hits[10] = {0};
  const int draws = 2000;
  for (int i = 0; i < draws; ++i) {
    std::vector<int> ids = ldpfed::select_k(10, 3, rng);
    check(ids.size() == 3, "selection size is not k");
    for (size_t j = 1; j < ids.size(); ++j)
      check(ids[j - 1] < ids[j], "selection not sorted or not distinct");
    for (int id : ids) {
      check(id >= 0 && id < 10, "selection out of range");
      ++hits[id];
    }
  }
  for (int id = 0; id < 10; ++id) {
    double freq = static_cast<double>(hits[id]) / draws;
    check(std::abs(freq - 0.3) < 0.04,
          "selection marginal for id " + std::to_string(id) + " is " +
              ldpfed::format_double(freq));
  }
}

int cmd_selftest() {
  using Property = std::pair<const char*, std::function<void()>>;
  const std::vector<Property> properties = {
      {"mechanism_pmf_sums_to_one", selftest_pmf_sums},
      {"mechanism_ratio_bound_small_universe", selftest_ratio_bound},
      {"sampler_matches_pmf", selftest_sampler_matches_pmf},
      {"gradient_matches_finite_difference", selftest_gradient_check},
      {"schedule_budget_conservation", selftest_budget_conservation},
      {"discretize_round_trip", selftest_discretize_round_trip},
      {"partition_covers_dataset", selftest_partition_covers},
      {"selection_exactly_k_uniform", selftest_selection_exact_k},
  };
  int failures = 0;
  for (const auto& [name, fn] : properties) {
    try {
      fn();
      std::cout << "ok   " << name << '\n';
    } catch (const std::exception& e) {
      std::cout << "FAIL " << name << ": " << e.what() << '\n';
      ++failures;
    }
  }
  if (failures > 0) {
    std::cerr << failures << " selftest propert" << (failures == 1 ? "y" : "ies")
              << " failed\n";
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Federated learning simulator with condensed local differential "
      "privacy"};
  app.require_subcommand(1);

  CommonFlags run_flags;
  CLI::App* run = app.add_subcommand("run", "Run one experiment and write metrics");
  add_common_flags(run, &run_flags);

  CommonFlags cmp_flags;
  bool assert_ordering = false;
  std::vector<int> sweep_cycles;
  CLI::App* compare =
      app.add_subcommand("compare", "Run comparison arms on shared data");
  add_common_flags(compare, &cmp_flags);
  compare->add_flag("--assert-ordering", assert_ordering,
                    "Check the expected accuracy ordering; nonzero exit on failure");
  compare
      ->add_option("--sweep-cycles", sweep_cycles,
                   "Run a cycle-count sweep instead of the arm comparison")
      ->delimiter(',');

  double im_clip = 1.0, im_alpha = 2.0, im_value = 0.0;
  int im_precision = 0;
  CLI::App* imech = app.add_subcommand("inspect-mechanism",
                                       "Print a randomizer's distribution and audit");
  imech->add_option("--clip", im_clip, "Clamp bound c");
  imech->add_option("--precision", im_precision, "Decimal digits kept");
  imech->add_option("--alpha", im_alpha, "Per-parameter budget");
  imech->add_option("--value", im_value, "Input value to inspect");

  CommonFlags sched_flags;
  CLI::App* isched =
      app.add_subcommand("inspect-schedule", "Print the round-by-round allocation");
  add_common_flags(isched, &sched_flags);

  CLI::App* selftest = app.add_subcommand("selftest", "Fast invariant checks");

  try {
    app.parse(argc, argv);
    if (run->parsed()) return cmd_run(run_flags);
    if (compare->parsed()) return cmd_compare(cmp_flags, assert_ordering, sweep_cycles);
    if (imech->parsed())
      return cmd_inspect_mechanism(im_clip, im_precision, im_alpha, im_value);
    if (isched->parsed()) return cmd_inspect_schedule(sched_flags);
    if (selftest->parsed()) return cmd_selftest();
    return 2;
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const ldpfed::config_error& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const ldpfed::domain_error& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const ldpfed::data_error& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 3;
  } catch (const ldpfed::format_error& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 3;
  } catch (const ldpfed::numeric_error& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
