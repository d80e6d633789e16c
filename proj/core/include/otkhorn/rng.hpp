#pragma once

#include <cstdint>

namespace otk {

// Counter-based 64-bit generator (SplitMix64, Steele et al.). The state is a
// plain counter advanced by the golden-ratio increment and each output is a
// finalizer hash of the counter, so streams with distinct seeds are
// independent and the k-th draw is a pure function of (seed, k).
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Fair coin from the top bit.
  bool bernoulli() { return (next_u64() >> 63) != 0; }

  // Uniform on {0, ..., n-1} by rejection: draws below 2^64 mod n are
  // discarded so the modulus is unbiased.
  std::uint64_t uniform_below(std::uint64_t n) {
    const std::uint64_t min = (-n) % n;  // 2^64 mod n
    std::uint64_t v;
    do {
      v = next_u64();
    } while (v < min);
    return v % n;
  }

  // Uniform double in [0, 1) from the top 53 bits.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Derives an independent stream seed, e.g. one per benchmark pair.
  static std::uint64_t derive(std::uint64_t seed, std::uint64_t index) {
    CounterRng g(seed ^ (0xA0761D6478BD642FULL * (index + 1)));
    return g.next_u64();
  }

 private:
  std::uint64_t state_;
};

}  // namespace otk
