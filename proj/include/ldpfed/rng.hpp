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

#ifndef LDPFED_RNG_HPP
#define LDPFED_RNG_HPP

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace ldpfed {

// Every random draw in the system comes from a Stream derived from
// (master seed, purpose tag, round, actor). Streams are independent and the
// derivation is order-free, so results do not depend on thread scheduling.

inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Folds a list of tags into a seed. derive(s, {a, b}) != derive(s, {b, a}).
inline uint64_t derive_seed(uint64_t seed, std::initializer_list<uint64_t> tags) {
  uint64_t x = splitmix64(seed);
  for (uint64_t t : tags) x = splitmix64(x ^ t);
  return x;
}

namespace stream_tag {
// Purpose tags for substream derivation.
inline constexpr uint64_t kModelInit = 0x01;
inline constexpr uint64_t kServer = 0x02;
inline constexpr uint64_t kClient = 0x03;
inline constexpr uint64_t kPartition = 0x04;
inline constexpr uint64_t kBlobMeans = 0x05;
inline constexpr uint64_t kBlobNoise = 0x06;
}  // namespace stream_tag

/// Deterministic random stream. mt19937_64 is fully specified by the
/// standard, and all value transformations below are hand-rolled, so a
/// Stream produces identical sequences on every platform.
class Stream {
 public:
  explicit Stream(uint64_t seed) : engine_(splitmix64(seed)) {}

  uint64_t bits() { return engine_(); }

  /// Uniform double in [0, 1) with 53 random bits.
  double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n). n must be positive.
  uint64_t below(uint64_t n) {
    // Masked rejection keeps the draw unbiased.
    if (n <= 1) return 0;
    uint64_t limit = n - 1;
    uint64_t mask = ~uint64_t{0} >> __builtin_clzll(limit);
    for (;;) {
      uint64_t v = engine_() & mask;
      if (v < n) return v;
    }
  }

  /// Uniform double in (lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }

  /// Standard normal via Box-Muller (std::normal_distribution is not
  /// portable across standard libraries).
  double gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = unit();
    double u2 = unit();
    while (u1 <= 0.0) u1 = unit();
    double r = std::sqrt(-2.0 * std::log(u1));
    double theta = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

  /// In-place Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& xs) {
    for (size_t i = xs.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(below(i));
      std::swap(xs[i - 1], xs[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace ldpfed

#endif  // LDPFED_RNG_HPP
