#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace lstn {

// Deterministic random source.  mt19937 output is fixed by the standard, and
// the derived draws below avoid std::*_distribution (whose algorithms are
// implementation-defined), so a given seed yields the same stream everywhere.
class Rng {
 public:
  explicit Rng(uint64_t seed) : gen_(static_cast<uint32_t>(seed ^ (seed >> 32))) {}

  uint32_t next_u32() { return gen_(); }

  // Uniform in (0, 1), never exactly 0 or 1.
  double uniform() { return (static_cast<double>(gen_()) + 0.5) * (1.0 / 4294967296.0); }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n).
  int uniform_int(int n) { return static_cast<int>(gen_() % static_cast<uint32_t>(n)); }

  // Box-Muller; one fresh pair per call keeps the stream easy to reason about.
  double normal() {
    double u1 = uniform();
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  // Fisher-Yates with our own index draws, so the permutation is stable
  // across standard library implementations.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = gen_() % i;
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937 gen_;
};

// Stable hash of (seed, salt), for deriving per-video or per-epoch seeds.
inline uint64_t mix_seed(uint64_t seed, uint64_t salt) {
  uint64_t h = seed * 0x9E3779B97F4A7C15ull + salt * 0xBF58476D1CE4E5B9ull + 0x94D049BB133111EBull;
  h ^= h >> 31;
  return h;
}

// Derives an independent stream for (seed, salt) pairs, e.g. per epoch.
inline Rng derive_rng(uint64_t seed, uint64_t salt) { return Rng(mix_seed(seed, salt)); }

}  // namespace lstn
