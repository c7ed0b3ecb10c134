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

#ifndef LDPFED_METRICS_HPP
#define LDPFED_METRICS_HPP

#include <charconv>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ldpfed/errors.hpp"

namespace ldpfed {

/// One training round's outcome. Written both as line-delimited JSON and as
/// CSV; identical inputs produce byte-identical files.
struct MetricsRow {
  int round = 0;
  std::string arm;
  double test_accuracy = 0.0;
  double test_loss = 0.0;
  double alpha_spent = 0.0;
  double wall_ms = 0.0;
};

/// Shortest decimal form that round-trips, the same across platforms.
inline std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw numeric_error("format_double: conversion failed");
  return std::string(buf, ptr);
}

inline nlohmann::ordered_json metrics_json(const MetricsRow& row) {
  nlohmann::ordered_json j;
  j["round"] = row.round;
  j["arm"] = row.arm;
  j["test_accuracy"] = row.test_accuracy;
  j["test_loss"] = row.test_loss;
  j["alpha_spent"] = row.alpha_spent;
  j["wall_ms"] = row.wall_ms;
  return j;
}

inline void write_metrics_jsonl(const std::string& path,
                                const std::vector<MetricsRow>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw data_error("cannot open '" + path + "' for writing");
  for (const auto& row : rows) out << metrics_json(row).dump() << '\n';
  if (!out) throw data_error("write failed for '" + path + "'");
}

inline void write_metrics_csv(const std::string& path,
                              const std::vector<MetricsRow>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw data_error("cannot open '" + path + "' for writing");
  out << "round,arm,test_accuracy,test_loss,alpha_spent,wall_ms\n";
  for (const auto& row : rows)
    out << row.round << ',' << row.arm << ',' << format_double(row.test_accuracy)
        << ',' << format_double(row.test_loss) << ',' << format_double(row.alpha_spent)
        << ',' << format_double(row.wall_ms) << '\n';
  if (!out) throw data_error("write failed for '" + path + "'");
}

}  // namespace ldpfed

#endif  // LDPFED_METRICS_HPP
