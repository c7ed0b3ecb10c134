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

#ifndef LDPFED_MECHANISM_HPP
#define LDPFED_MECHANISM_HPP

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ldpfed/errors.hpp"
#include "ldpfed/rng.hpp"

namespace ldpfed {

// Value randomizer used by the protocol: clamp a real parameter, scale it to
// an integer grid, then release a random grid point whose probability decays
// exponentially with the distance from the true point. The decay rate is
// alpha/2, which keeps the probability ratio of any two inputs v1, v2 at any
// output bounded by exp(alpha * |v1 - v2|).

/// Maps reals into the integer universe [-U, U] with U = clip * 10^precision.
struct DiscretizationSpec {
  double clip = 1.0;    // values are clamped to [-clip, clip] first
  int precision = 2;    // decimal digits kept after clamping

  void validate() const {
    if (!(clip > 0.0) || !std::isfinite(clip))
      throw config_error("discretization: clip must be positive and finite");
    if (precision < 0 || precision > 15)
      throw config_error("discretization: precision must be in [0, 15]");
    double scaled = clip * scale();
    if (scaled > 4.0e18)
      throw config_error("discretization: clip * 10^precision exceeds the integer range");
    if (std::abs(scaled - std::nearbyint(scaled)) > 1e-6)
      throw config_error("discretization: clip * 10^precision must be an integer");
  }

  /// 10^precision.
  double scale() const { return std::pow(10.0, precision); }

  /// Largest universe point U; the grid is the integers in [-U, U].
  int64_t universe_bound() const {
    return std::llround(clip * scale());
  }
};

/// Clamp, scale, and round half away from zero onto the integer grid.
inline int64_t discretize(double x, const DiscretizationSpec& spec) {
  if (std::isnan(x)) throw numeric_error("discretize: NaN input");
  double clamped = std::min(std::max(x, -spec.clip), spec.clip);
  return std::llround(clamped * spec.scale());
}

/// Grid point back to a real value.
inline double undiscretize(int64_t v, const DiscretizationSpec& spec) {
  return static_cast<double>(v) / spec.scale();
}

/// Worst-case probability-ratio audit result over every (input, input, output)
/// triple of a mechanism instance.
struct CldpReport {
  double max_slack = 0.0;      // max of log-ratio minus alpha * distance
  bool satisfied = false;      // max_slack within tolerance
  uint64_t triples_checked = 0;
};

/// Exponential mechanism over the integer universe [-U, U] with score
/// -|v - y|. Sampling is exact inverse-CDF using closed-form geometric tail
/// sums, so the universe can be far too large to materialize.
class EmMechanism {
 public:
  /// Entry cap for materialized distributions.
  static constexpr size_t kMaxPmfEntries = 10'000'000;
  /// Universe cap for the exhaustive ratio audit (it is cubic).
  static constexpr int64_t kMaxVerifyUniverse = 1001;
  /// Audit tolerance on the log-ratio slack.
  static constexpr double kSlackTolerance = 1e-9;

  EmMechanism(double alpha, int64_t universe_bound)
      : alpha_(alpha),
        bound_(universe_bound),
        a_(alpha / 2.0),
        exp_neg_a_(std::exp(-alpha / 2.0)),
        expm1_neg_a_(std::expm1(-alpha / 2.0)) {
    if (!(alpha > 0.0) || !std::isfinite(alpha))
      throw config_error("mechanism: alpha must be positive and finite");
    if (universe_bound < 1)
      throw config_error("mechanism: universe bound must be >= 1");
  }

  double alpha() const { return alpha_; }
  int64_t universe_bound() const { return bound_; }
  size_t universe_size() const { return static_cast<size_t>(2 * bound_ + 1); }

  /// log of the normalizing constant Z(v) = sum_y exp(-a * |v - y|).
  double log_normalizer(int64_t v) const {
    check_point(v, "log_normalizer");
    return std::log1p(tail_sum(v + bound_) + tail_sum(bound_ - v));
  }

  /// Probability of releasing y when the true point is v.
  double pmf_at(int64_t v, int64_t y) const {
    check_point(v, "pmf_at");
    check_point(y, "pmf_at");
    double d = static_cast<double>(std::llabs(v - y));
    return std::exp(-a_ * d - log_normalizer(v));
  }

  /// Full distribution for input v, indexed by y + universe_bound().
  std::vector<double> pmf(int64_t v) const {
    check_point(v, "pmf");
    if (universe_size() > kMaxPmfEntries)
      throw capacity_error("mechanism: universe too large to materialize (" +
                           std::to_string(universe_size()) + " > " +
                           std::to_string(kMaxPmfEntries) + " entries)");
    double log_z = log_normalizer(v);
    std::vector<double> p(universe_size());
    for (int64_t y = -bound_; y <= bound_; ++y)
      p[static_cast<size_t>(y + bound_)] =
          std::exp(-a_ * static_cast<double>(std::llabs(v - y)) - log_z);
    return p;
  }

  /// Draw one release for input v. Exact inverse CDF: pick the center, the
  /// left tail, or the right tail by cumulative weight, then invert the
  /// truncated geometric within the chosen tail in closed form.
  int64_t sample(int64_t v, Stream& rng) const {
    check_point(v, "sample");
    int64_t left = v + bound_;    // grid points below v
    int64_t right = bound_ - v;   // grid points above v
    double sl = tail_sum(left);
    double z = 1.0 + sl + tail_sum(right);
    double x = rng.unit() * z;
    if (x < 1.0) return v;
    if (x < 1.0 + sl) return v - tail_quantile(x - 1.0, left);
    return v + tail_quantile(x - 1.0 - sl, right);
  }

  /// Exhaustively audit the ratio bound: for every pair of inputs and every
  /// output, log p(v1, y) - log p(v2, y) must stay within alpha * |v1 - v2|.
  CldpReport verify_cldp_bound() const {
    if (bound_ > kMaxVerifyUniverse / 2)
      throw capacity_error("mechanism: universe too large for the exhaustive audit");
    int64_t n = 2 * bound_ + 1;
    std::vector<double> log_z(static_cast<size_t>(n));
    for (int64_t v = -bound_; v <= bound_; ++v)
      log_z[static_cast<size_t>(v + bound_)] = log_normalizer(v);

    CldpReport report;
    report.max_slack = -HUGE_VAL;
    for (int64_t v1 = -bound_; v1 <= bound_; ++v1) {
      double lz1 = log_z[static_cast<size_t>(v1 + bound_)];
      for (int64_t v2 = -bound_; v2 <= bound_; ++v2) {
        if (v1 == v2) continue;
        double lz2 = log_z[static_cast<size_t>(v2 + bound_)];
        double budget = alpha_ * static_cast<double>(std::llabs(v1 - v2));
        for (int64_t y = -bound_; y <= bound_; ++y) {
          double d1 = static_cast<double>(std::llabs(v1 - y));
          double d2 = static_cast<double>(std::llabs(v2 - y));
          double slack = a_ * (d2 - d1) + lz2 - lz1 - budget;
          if (slack > report.max_slack) report.max_slack = slack;
          ++report.triples_checked;
        }
      }
    }
    report.satisfied = report.max_slack <= kSlackTolerance;
    return report;
  }

 private:
  void check_point(int64_t p, const char* where) const {
    if (p < -bound_ || p > bound_)
      throw domain_error(std::string("mechanism: ") + where + ": point " +
                         std::to_string(p) + " outside universe [-" +
                         std::to_string(bound_) + ", " + std::to_string(bound_) + "]");
  }

  /// S(m) = sum_{j=1..m} t^j with t = exp(-a), in expm1 form so it stays
  /// accurate when a is tiny (t near 1) or huge (t near 0).
  double tail_sum(int64_t m) const {
    if (m <= 0) return 0.0;
    return exp_neg_a_ * std::expm1(-a_ * static_cast<double>(m)) / expm1_neg_a_;
  }

  /// Smallest j in [1, m] with S(j) > s, inverted in closed form.
  int64_t tail_quantile(double s, int64_t m) const {
    double g = -expm1_neg_a_ * (1.0 + s);  // (1 - t) * (1 + s)
    if (g >= 1.0) return m;                   // rounding pushed past the last point
    double ratio = std::log1p(-g) / (-a_);
    int64_t j = static_cast<int64_t>(std::ceil(ratio)) - 1;
    if (j < 1) j = 1;
    if (j > m) j = m;
    return j;
  }

  double alpha_;
  int64_t bound_;
  double a_;
  double exp_neg_a_;
  double expm1_neg_a_;
};

/// Discretize and randomize one layer's parameter values. The mechanism's
/// universe must match the discretization grid.
inline std::vector<int64_t> perturb_values(std::span<const double> values,
                                           const DiscretizationSpec& spec,
                                           const EmMechanism& mech, Stream& rng) {
  if (mech.universe_bound() != spec.universe_bound())
    throw config_error("perturb: mechanism universe does not match discretization");
  std::vector<int64_t> out(values.size());
  for (size_t i = 0; i < values.size(); ++i)
    out[i] = mech.sample(discretize(values[i], spec), rng);
  return out;
}

/// Discretize without randomizing (the private-path bypass used by the
/// non-private reference arm).
inline std::vector<int64_t> discretize_values(std::span<const double> values,
                                              const DiscretizationSpec& spec) {
  std::vector<int64_t> out(values.size());
  for (size_t i = 0; i < values.size(); ++i) out[i] = discretize(values[i], spec);
  return out;
}

/// Average the clients' integer vectors back into real units. Summation is
/// integer and in client order, so the result is exact and order-stable.
inline std::vector<double> aggregate(const std::vector<std::vector<int64_t>>& contributions,
                                     const DiscretizationSpec& spec) {
  if (contributions.empty()) throw protocol_error("aggregate: no contributions");
  size_t n = contributions.front().size();
  for (const auto& c : contributions)
    if (c.size() != n) throw shape_error("aggregate: contribution lengths differ");
  double count = static_cast<double>(contributions.size());
  double scale = spec.scale();
  std::vector<double> out(n);
  for (size_t i = 0; i < n; ++i) {
    int64_t sum = 0;
    for (const auto& c : contributions) sum += c[i];
    out[i] = static_cast<double>(sum) / count / scale;
  }
  return out;
}

}  // namespace ldpfed

#endif  // LDPFED_MECHANISM_HPP
