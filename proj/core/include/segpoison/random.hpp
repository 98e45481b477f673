#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace segpoison {

// splitmix64 finalizer.
std::uint64_t mix64(std::uint64_t value);

// Seeds for independent streams. Every random decision in the toolkit is
// keyed by (seed, what it is for), never by position in a shared stream, so
// results do not depend on evaluation order.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag);
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0);

// Portable draws on top of mt19937_64. The standard distributions are
// implementation-defined, which would break cross-platform reproducibility.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  // Uniform integer in [0, bound). bound must be > 0.
  std::uint64_t below(std::uint64_t bound);
  // Uniform integer in [lo, hi].
  std::int64_t between(std::int64_t lo, std::int64_t hi);
  // Uniform double in [0, 1) with 53 random bits.
  double uniform();
  double normal();

 private:
  std::mt19937_64 engine_;
};

}  // namespace segpoison
