#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>

namespace advgrasp {

// All randomness in the project flows through this header. Standard-library
// distributions are implementation-defined, so draws would not reproduce
// across toolchains; the generator and the draw algorithms here are pinned.

// splitmix64 finalizer. Bijective on u64.
inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

// Stable stream derivation: children of the same base with distinct tags are
// decorrelated, and the mapping never changes between runs or versions.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a,
                                 std::uint64_t b = 0, std::uint64_t c = 0) {
  std::uint64_t h = base;
  h = mix64(h + 0x9e3779b97f4a7c15ull + a);
  h = mix64(h + 0x9e3779b97f4a7c15ull + b);
  h = mix64(h + 0x9e3779b97f4a7c15ull + c);
  return h;
}

inline std::uint64_t derive_seed(std::uint64_t base, std::string_view tag,
                                 std::uint64_t b = 0, std::uint64_t c = 0) {
  return derive_seed(base, fnv1a64(tag), b, c);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ull;
    return mix64(state_);
  }

  // [0, 1), 53-bit resolution
  double uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // [lo, hi)
  double uniform(double lo, double hi) {
    return lo + (hi - lo) * uniform01();
  }

  // (lo, hi]: the mirror image of uniform(), so hi is attainable and lo not
  double uniform_open_closed(double lo, double hi) {
    return hi - (hi - lo) * uniform01();
  }

  // {0, ..., n-1}; modulo bias is < n / 2^64
  std::uint64_t uniform_int(std::uint64_t n) { return next_u64() % n; }

  bool bernoulli(double p) { return uniform01() < p; }

  int sign() { return (next_u64() & 1) ? 1 : -1; }

  double normal(double mu = 0.0, double sigma = 1.0) {
    if (have_spare_) {
      have_spare_ = false;
      return mu + sigma * spare_;
    }
    double u1 = uniform01();
    while (u1 <= 0.0) u1 = uniform01();
    double u2 = uniform01();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return mu + sigma * (r * std::cos(a));
  }

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace advgrasp
