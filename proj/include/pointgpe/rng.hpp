#pragma once

#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

namespace pointgpe::rng {

// Platform-independent generator so seeded runs reproduce bit-identically
// everywhere; the standard distributions are implementation-defined and are
// deliberately avoided.

inline uint64_t splitmix64(uint64_t& state) {
  uint64_t z = (state += 0x9E3779B97F4A7C15ull);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

/// Deterministic combination of a user seed with a stream index (run number,
/// class number, ...), decorrelating the per-stream sequences.
inline uint64_t mix(uint64_t seed, uint64_t stream) {
  uint64_t state = seed;
  uint64_t h = splitmix64(state);
  state = h ^ (stream * 0xA24BAED4963EE407ull + 0x9E3779B97F4A7C15ull);
  return splitmix64(state);
}

class Engine {
 public:
  explicit Engine(uint64_t seed) : state_(seed) {}

  uint64_t next() { return splitmix64(state_); }

  /// Uniform integer in [0, n), unbiased via rejection. n must be >= 1.
  uint64_t bounded(uint64_t n) {
    const uint64_t threshold = (0 - n) % n;  // 2^64 mod n
    uint64_t r;
    do {
      r = next();
    } while (r < threshold);
    return r % n;
  }

  /// Uniform double in [0, 1).
  double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Uniform double in [lo, hi).
  double range(double lo, double hi) { return lo + (hi - lo) * unit(); }

  /// Standard normal via Box-Muller.
  double normal() {
    if (have_cached_) {
      have_cached_ = false;
      return cached_;
    }
    double u1 = unit();
    while (u1 <= 0.0) u1 = unit();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925287 * unit();
    cached_ = r * std::sin(a);
    have_cached_ = true;
    return r * std::cos(a);
  }

  /// Fisher-Yates shuffle driven by bounded().
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[bounded(i)]);
  }

 private:
  uint64_t state_;
  bool have_cached_ = false;
  double cached_ = 0.0;
};

}  // namespace pointgpe::rng
