#pragma once

// Counter-based deterministic random numbers (SplitMix64 finalizer).
//
// Draw n of the stream with seed s is mix64(s + (n+1)*golden), i.e. random
// access by counter: the value consumed at simulation round t depends only on
// (seed, t) and never on how many draws happened before. That is what makes
// traces byte-reproducible and lets parallel workers share a master seed
// without coordination.

#include <cmath>
#include <cstdint>

namespace infbandit::rng {

inline constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

// SplitMix64 output mixing function (Steele, Lea & Flood; public domain).
inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// n-th 64-bit value of the stream identified by `seed`.
inline std::uint64_t at(std::uint64_t seed, std::uint64_t n) {
  return mix64(seed + (n + 1) * kGolden);
}

// Uniform double in [0, 1), 53 random bits.
inline double uniform01(std::uint64_t seed, std::uint64_t n) {
  return static_cast<double>(at(seed, n) >> 11) * 0x1.0p-53;
}

// Uniform double in [-bound, bound].
inline double uniform_symmetric(std::uint64_t seed, std::uint64_t n,
                                double bound) {
  return (2.0 * uniform01(seed, n) - 1.0) * bound;
}

// Standard normal via Box-Muller; consumes counters 2n and 2n+1 so that
// consecutive n never share raw draws. u1 is shifted into (0, 1] to keep the
// logarithm finite.
inline double gaussian(std::uint64_t seed, std::uint64_t n) {
  const double u1 =
      (static_cast<double>(at(seed, 2 * n) >> 11) + 1.0) * 0x1.0p-53;
  const double u2 = static_cast<double>(at(seed, 2 * n + 1) >> 11) * 0x1.0p-53;
  constexpr double kTwoPi = 6.283185307179586476925286766559;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
}

// Independent child seed: hash of (master, stream index). Used to hand every
// task in a batch (seed index, instance index, ...) its own stream.
inline std::uint64_t derive(std::uint64_t master, std::uint64_t stream) {
  return mix64(master ^ mix64(stream + kGolden));
}

// Small sequential convenience wrapper over the counter interface for code
// that just wants "the next draw" (random policy, ingestion tie-breaks).
class Stream {
 public:
  explicit Stream(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t next_u64() { return at(seed_, counter_++); }

  double next_uniform01() { return uniform01(seed_, counter_++); }

  // Uniform integer in [0, n); n must be positive. Modulo bias is irrelevant
  // at the tiny n used here (candidate lists, arm counts).
  std::uint64_t next_below(std::uint64_t n) { return next_u64() % n; }

  double next_gaussian() {
    const double v = gaussian(seed_, counter_);
    counter_ += 1;  // gaussian() internally spreads to counters 2n, 2n+1
    return v;
  }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t seed_ = 0;
  std::uint64_t counter_ = 0;
};

}  // namespace infbandit::rng
