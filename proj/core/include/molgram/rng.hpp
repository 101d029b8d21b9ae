#pragma once

#include <cstdint>

namespace molgram {

// Deterministic splitmix64 generator. We roll our own instead of using
// <random> distributions because their output is implementation-defined
// and the CLI promises byte-identical results for a fixed seed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1) with 53 bits of entropy.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) { return uniform() < p; }

  // Unbiased-enough index in [0, n) via 128-bit multiply.
  std::size_t index(std::size_t n) {
    return static_cast<std::size_t>(
        (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  // Stream derivation so parallel work is seeded independently of order.
  static std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
    Rng r(a);
    std::uint64_t x = r.next_u64() ^ (b + 0x9e3779b97f4a7c15ull);
    Rng r2(x);
    return r2.next_u64();
  }
  static std::uint64_t mix(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
    return mix(mix(a, b), c);
  }

 private:
  std::uint64_t state_;
};

}  // namespace molgram
