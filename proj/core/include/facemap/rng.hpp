#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>

namespace facemap {

namespace detail {

// SplitMix64 finalizer.
inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 1469598103934665603ull;
  for (const char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace detail

// SplitMix64 stream. All sampling is built on the raw 64-bit output because
// std::shuffle and the standard distributions are implementation-defined and
// would break the bit-reproducibility contract of seeded runs.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ull;
    return detail::mix64(state_);
  }

  /// Uniform in [0, 1) with 53 random bits.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Unbiased uniform integer in [0, n). Requires n >= 1.
  std::uint64_t next_below(std::uint64_t n) {
    const std::uint64_t reject_below = (0 - n) % n;  // 2^64 mod n
    for (;;) {
      const std::uint64_t x = next_u64();
      if (x >= reject_below) return x % n;
    }
  }

  /// Standard normal deviate (Box-Muller).
  double next_normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;  // (0, 1]
    const double u2 = next_double();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

 private:
  std::uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Seed derivation for independent streams. Children are keyed by a purpose
// tag plus integer indices, so adding one kind of object never perturbs the
// streams of another.
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view tag) {
  return detail::mix64(master ^ detail::fnv1a64(tag));
}

inline std::uint64_t derive_seed(std::uint64_t master, std::string_view tag, std::uint64_t a) {
  return detail::mix64(derive_seed(master, tag) ^ (a + 0x9e3779b97f4a7c15ull));
}

inline std::uint64_t derive_seed(std::uint64_t master, std::string_view tag, std::uint64_t a,
                                 std::uint64_t b) {
  return detail::mix64(derive_seed(master, tag, a) ^ (b + 0x2545f4914f6cdd1dull));
}

}  // namespace facemap
