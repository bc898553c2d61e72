#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace isingsel {

/// Name and version of the generator stack, echoed into experiment metadata
/// so that golden outputs can be tied to a specific algorithm.
inline constexpr const char *kRngAlgorithm = "mt19937_64+splitmix64/v1";

/// SplitMix64 finalizer. Used to decorrelate derived seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Folds a list of words into a single seed. Order matters.
inline std::uint64_t derive_seed(std::uint64_t base,
                                 std::initializer_list<std::uint64_t> words) {
  std::uint64_t h = splitmix64(base);
  for (std::uint64_t w : words)
    h = splitmix64(h ^ splitmix64(w + 0x632be59bd9b4e019ULL));
  return h;
}

/// Thin wrapper around mt19937_64 with distribution code written out by hand,
/// because the standard distributions are not specified bit-exactly across
/// library implementations.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  bool coin() { return (engine_() >> 63) != 0; }

  /// +1 or -1 with equal probability.
  int spin() { return coin() ? 1 : -1; }

private:
  std::mt19937_64 engine_;
};

} // namespace isingsel
