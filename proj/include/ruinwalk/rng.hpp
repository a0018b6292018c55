#pragma once

#include <cstdint>

namespace ruinwalk {

// SplitMix64 (Steele, Lea, Flood 2014): state += 0x9E3779B97F4A7C15, then a
// fixed 64-bit finaliser.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Seed of substream `index`: first output of a generator whose state is
  // `seed` xor an odd multiple of (index + 1).
  static std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t index) {
    SplitMix64 g(seed ^ (0xD1B54A32D192ED03ull * (index + 1)));
    return g.next();
  }

 private:
  std::uint64_t state_;
};

}  // namespace ruinwalk
