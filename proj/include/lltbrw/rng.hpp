#pragma once

#include <cmath>
#include <cstdint>

namespace lltbrw {

/// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebULL;
  x ^= x >> 31;
  return x;
}

/// Keyed derivation: distinct (key, word) pairs map to unrelated outputs.
constexpr std::uint64_t derive(std::uint64_t key, std::uint64_t word) noexcept {
  return mix64(key ^ mix64(word + 0x9e3779b97f4a7c15ULL));
}

/// splitmix64 stream. Cheap to create, so one is made per (replicate,
/// generation, site) and the draws never depend on processing order.
class Stream {
 public:
  explicit constexpr Stream(std::uint64_t seed) noexcept : state_(seed) {}

  constexpr std::uint64_t next() noexcept {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix64(state_);
  }

  /// Uniform on (0, 1).
  double uniform() noexcept { return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53; }

  /// Standard normal, Marsaglia polar method.
  double normal() noexcept {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    has_spare_ = true;
    return u * f;
  }

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Identifies one independent replicate; every stream it hands out is a pure
/// function of (base_seed, replicate_index, generation, ordinal).
struct ReplicateSeed {
  std::uint64_t base_seed = 0;
  std::uint64_t replicate_index = 0;

  Stream stream(std::uint64_t generation, std::uint64_t ordinal) const noexcept {
    std::uint64_t k = derive(base_seed, replicate_index);
    k = derive(k, generation);
    k = derive(k, ordinal);
    return Stream(k);
  }
};

}  // namespace lltbrw
