#pragma once

#include <cmath>
#include <cstdint>

#include "rcm/lattice.hpp"

namespace rcm {

// Counter-based randomness: every deviate is a pure function of its key, so
// results never depend on query order or thread scheduling.

inline constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline constexpr std::uint64_t combine(std::uint64_t h, std::uint64_t v) {
  return mix64(h ^ mix64(v + 0x632be59bd9b4e019ULL));
}

enum class Channel : std::uint64_t {
  kSite = 0x51,
  kConductance = 0x52,
  kWalk = 0x53,
  kSeedDerive = 0x54,
  kJitter = 0x55,
};

inline std::uint64_t hash_point(std::uint64_t seed, Channel ch, const LatticePoint& x,
                                std::uint64_t extra = 0) {
  std::uint64_t h = combine(mix64(seed), static_cast<std::uint64_t>(ch));
  h = combine(h, static_cast<std::uint64_t>(x.dim()));
  for (int i = 0; i < x.dim(); ++i) h = combine(h, static_cast<std::uint64_t>(x[i]));
  return combine(h, extra);
}

/// Uniform in [0, 1).
inline double to_unit(std::uint64_t h) { return static_cast<double>(h >> 11) * 0x1.0p-53; }

/// Uniform in the open interval (0, 1); safe for log().
inline double to_open_unit(std::uint64_t h) {
  return (static_cast<double>(h >> 11) + 0.5) * 0x1.0p-53;
}

/// Child seed for sub-task `index` of a run seeded with `seed`.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  return combine(combine(mix64(seed), static_cast<std::uint64_t>(Channel::kSeedDerive)), index);
}

/// Sequential view over a counter-based stream. Value k is hash(seed, k).
class CounterStream {
 public:
  explicit CounterStream(std::uint64_t seed, std::uint64_t start = 0)
      : key_(combine(mix64(seed), static_cast<std::uint64_t>(Channel::kWalk))), counter_(start) {}

  std::uint64_t at(std::uint64_t k) const { return combine(key_, k); }
  std::uint64_t next_u64() { return at(counter_++); }
  double uniform() { return to_unit(next_u64()); }
  double open_uniform() { return to_open_unit(next_u64()); }
  double exponential(double rate) { return -std::log(open_uniform()) / rate; }
  double normal() {
    // Box-Muller, one deviate per call.
    const double u1 = open_uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }
  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_;
};

}  // namespace rcm
