// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ptloss Authors

#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>

namespace ptloss {

/// Derives an independent 64-bit seed from a root seed, a purpose tag and an
/// index. Every random stream in the project is obtained this way so that no
/// two consumers share a generator and results do not depend on call order.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view purpose, std::uint64_t index = 0);

/// Seeded generator with platform-independent output.
///
/// The engine is std::mt19937_64, whose sequence is fixed by the standard.
/// The distribution transforms are implemented here rather than taken from
/// <random>, whose distributions are implementation-defined:
///   uniform  - top 53 bits of one engine draw, scaled to [0, 1)
///   normal   - Box-Muller transform (both variates are used)
///   below(n) - rejection sampling on the engine output, no modulo bias
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform();
  double uniform(double lo, double hi);
  double normal();
  std::uint64_t below(std::uint64_t n);

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

}  // namespace ptloss
