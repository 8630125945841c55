#pragma once

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace addsep {

/// Deterministic random source used wherever a seed appears in a config.
///
/// Wraps std::mt19937_64 (whose stream is fully specified by the standard)
/// but maps raw draws to doubles and bounded integers by hand, so that two
/// builds on different standard libraries produce identical sequences.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  /// Uniform double in [lo, hi). Uses the top 53 bits of one draw.
  double uniform(double lo, double hi) {
    const double u = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    return lo + (hi - lo) * u;
  }

  /// Unbiased integer in [0, n). Rejection sampling, n > 0.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t r;
    do {
      r = next_u64();
    } while (r >= limit);
    return r % n;
  }

  /// Fisher-Yates shuffle, high index down, so permutations are
  /// reproducible independent of std::shuffle's unspecified algorithm.
  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[below(i)]);
    }
  }

 private:
  std::mt19937_64 gen_;
};

/// Stable per-item seed derivation (splitmix64 finalizer over a salted
/// combination). Lets independent work units draw from a single master seed
/// without any ordering coupling, so parallel schedules cannot change
/// results.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index,
                                 std::uint64_t stream = 0) {
  std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (index + 1) +
                    0x632be59bd9b4e019ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace addsep
