#pragma once

// Seeded random streams whose outputs are fixed by the seed alone.
//
// std::mt19937_64 has a standardized output sequence, but the standard
// distributions do not, so the transforms to uniform reals, bounded integers,
// gaussians and shuffles are implemented here. That keeps corpora, plans and
// reports bit-identical across standard library implementations.

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

namespace curriculum {

// Mixes a master seed with a stream index and a purpose tag into an
// independent 64-bit seed (splitmix64 finalizer over FNV-1a of the tag).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index,
                          std::string_view purpose);
std::uint64_t derive_seed(std::uint64_t master, std::string_view purpose);

// 64-bit FNV-1a.
std::uint64_t fingerprint64(std::string_view text);

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform01();
  double uniform(double lo, double hi);

  // Uniform integer in [0, bound), bound > 0. Rejection sampling, no modulo bias.
  std::uint64_t below(std::uint64_t bound);
  // Uniform integer in [lo, hi], inclusive.
  std::int64_t between(std::int64_t lo, std::int64_t hi);

  // Standard normal (Box-Muller, one value per call).
  double gaussian();

  template <typename T>
  void shuffle(std::vector<T>& values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(below(i));
      std::swap(values[i - 1], values[j]);
    }
  }

  // k distinct indices drawn uniformly from [0, n), in draw order.
  std::vector<std::size_t> sample_without_replacement(std::size_t n,
                                                      std::size_t k);

 private:
  std::mt19937_64 engine_;
};

}  // namespace curriculum
