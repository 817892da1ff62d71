// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "logo/common.hpp"

namespace logo {

// Deterministic random source. All sampling goes through explicit methods so
// that a given seed produces the same draw sequence on every platform; no
// std::*_distribution is used because their algorithms are implementation
// defined. Box-Muller is evaluated without caching the second variate, so the
// full generator state is the engine state.
class Rng {
 public:
  Rng() : engine_(0) {}
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform in [0, 1).
  double uniform() {
    return (engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n).
  std::uint64_t uniform_int(std::uint64_t n) {
    LOGO_REQUIRE(n > 0, "uniform_int requires n > 0");
    // Rejection sampling keeps the draw unbiased.
    std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t v = engine_();
    while (v >= limit) v = engine_();
    return v % n;
  }

  bool bernoulli(double p) { return uniform() < p; }

  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = uniform_int(i);
      std::swap(v[i - 1], v[j]);
    }
  }

  std::string state() const {
    std::ostringstream os;
    os << engine_;
    return os.str();
  }

  void restore(const std::string& s) {
    std::istringstream is(s);
    is >> engine_;
    LOGO_REQUIRE(!is.fail(), "malformed rng state string");
  }

 private:
  std::mt19937_64 engine_;
};

// Derives an independent stream from (seed, purpose, index). Streams keyed on
// the step or epoch make training resumable without replaying earlier draws.
inline Rng derive_rng(std::uint64_t seed, const std::string& purpose, std::uint64_t index = 0) {
  std::uint64_t h = fnv1a(purpose);
  h = fnv1a(&seed, sizeof(seed), h);
  h = fnv1a(&index, sizeof(index), h);
  // splitmix64 finalizer spreads low-entropy keys over the full state space.
  h += 0x9e3779b97f4a7c15ull;
  h = (h ^ (h >> 30)) * 0xbf58476d1ce4e5b9ull;
  h = (h ^ (h >> 27)) * 0x94d049bb133111ebull;
  h = h ^ (h >> 31);
  return Rng(h);
}

}  // namespace logo
