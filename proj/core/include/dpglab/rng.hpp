#pragma once

/*
 * Counter-based deterministic random source.
 *
 * Every consumer owns a (seed, stream) pair and draws by hashing an
 * incrementing counter, so draws never depend on sharing or ordering of
 * generator state. Batch sample k always uses stream = base + k, which keeps
 * results identical whether a batch is generated serially or fanned out
 * across workers.
 */

#include <cmath>
#include <cstdint>

namespace dpglab::rng {

/* Stream namespaces, so independent consumers of the same run seed never
 * collide even when their local indices do. */
enum class Domain : std::uint64_t {
  policy_init = 1,
  train = 2,
  eval = 3,
  fit = 4,
  bench = 5,
  test = 6,
};

/* 64-bit finalizer (murmur3 style). Bijective, avalanches all bits. */
inline constexpr std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 33;
  z *= 0xFF51AFD7ED558CCDull;
  z ^= z >> 33;
  z *= 0xC4CEB9FE1A85EC53ull;
  z ^= z >> 33;
  return z;
}

class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream)
      : key_(mix64(seed + 0x9E3779B97F4A7C15ull) ^
             mix64(stream * 0xBF58476D1CE4E5B9ull + 0x94D049BB133111EBull)) {}

  std::uint64_t next_u64() { return mix64(key_ ^ (counter_++ * 0x9E3779B97F4A7C15ull)); }

  /* Uniform in [0, 1), 53-bit mantissa. */
  double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double next_uniform(double lo, double hi) { return lo + (hi - lo) * next_unit(); }

  /* Standard normal via Box-Muller; one draw per call, spare cached. */
  double next_gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    while (u1 == 0.0) u1 = next_unit();
    const double u2 = next_unit();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.28318530717958647692 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  /* Uniform integer in [0, n). n must be > 0. */
  std::uint64_t next_index(std::uint64_t n) {
    // Multiply-shift rejection-free map; bias is negligible for n << 2^64.
    return static_cast<std::uint64_t>((static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

inline CounterRng stream_rng(std::uint64_t seed, Domain domain, std::uint64_t index) {
  return CounterRng(seed, (static_cast<std::uint64_t>(domain) << 48) + index);
}

}  // namespace dpglab::rng
