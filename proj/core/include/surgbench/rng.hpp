#pragma once
// Deterministic RNG wrapper. std::mt19937_64 output is specified by the
// standard, but the std distributions are not; every draw here goes through
// our own mappings so corpora and sampled id lists are byte-identical across
// compilers and platforms.

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "surgbench/hash.hpp"

namespace surgbench {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next_u64() { return eng_(); }

  // Uniform in [0, n) via rejection sampling (no modulo bias).
  std::uint64_t bounded(std::uint64_t n) {
    if (n <= 1) return 0;
    const std::uint64_t threshold = (~std::uint64_t{0} - n + 1) % n;
    for (;;) {
      const std::uint64_t r = next_u64();
      if (r >= threshold) return r % n;
    }
  }

  // Uniform double in [0, 1) with 53 random bits.
  double unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  bool coin(double p) { return unit() < p; }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(bounded(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  // k distinct indices from [0, n), order of first selection (partial
  // Fisher-Yates). k >= n returns 0..n-1.
  std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k);

 private:
  std::mt19937_64 eng_;
};

// Derives an independent stream for a (seed, tag...) tuple. Used so records
// can be processed in any order while the output stays deterministic.
Rng derive_rng(std::uint64_t seed, std::span<const std::string_view> tags);
Rng derive_rng(std::uint64_t seed, std::string_view a, std::string_view b = {},
               std::string_view c = {});

}  // namespace surgbench
