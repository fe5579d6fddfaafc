#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace dpdec {

// Deterministic pseudo-randomness for simulations. Every consumer derives its
// own stream from (seed, purpose tag, indices), so adding or removing draws in
// one part of a run never shifts the values seen by another part.
class RngStream {
 public:
  explicit RngStream(std::uint64_t key) : state_(key) {}

  // Derives a stream key by absorbing the purpose tag and indices into the
  // seed with the splitmix output function between absorptions.
  template <typename... Ints>
  static RngStream keyed(std::uint64_t seed, std::string_view purpose, Ints... indices) {
    std::uint64_t h = mix(seed ^ fnv1a(purpose));
    ((h = mix(h ^ static_cast<std::uint64_t>(indices))), ...);
    return RngStream(h);
  }

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix(state_);
  }

  // Uniform on [0, 1), 53-bit resolution.
  double uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller; the second deviate of each pair is cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    // u1 must be strictly positive for the log.
    double u1 = (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
    double u2 = uniform01();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  // Uniform integer in [0, n), unbiased via rejection.
  std::uint64_t below(std::uint64_t n) {
    if (n < 2) return 0;
    std::uint64_t limit = ~std::uint64_t{0} - ~std::uint64_t{0} % n;
    std::uint64_t v;
    do {
      v = next_u64();
    } while (v >= limit);
    return v % n;
  }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  static std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : s) {
      h ^= static_cast<unsigned char>(c);
      h *= 0x100000001b3ULL;
    }
    return h;
  }

  std::uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace dpdec
