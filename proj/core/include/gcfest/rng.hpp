#ifndef GCFEST_RNG_HPP
#define GCFEST_RNG_HPP

#include <cmath>
#include <cstdint>

namespace gcfest {

// Deterministic, platform-independent random numbers.  std::mt19937 with
// std::normal_distribution is not reproducible across standard libraries,
// so we carry our own generator: splitmix64 for seeding, xoshiro256++ as
// the engine, and a polar-method normal sampler.  Streams are pure
// functions of their seeds, which is what makes panels bit-identical
// across runs and across worker counts.

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Collapses a (stream seed, substream index) pair into a single 64-bit
// seed.  Used for per-firm streams within a panel and per-replication
// streams within a study, with distinct domain tags so the two families
// never collide.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index,
                                 std::uint64_t domain) {
  std::uint64_t s = seed ^ (0x632be59bd9b4e019ULL * (domain + 1));
  std::uint64_t a = splitmix64(s);
  s ^= index * 0xd1342543de82ef95ULL + domain;
  std::uint64_t b = splitmix64(s);
  return a ^ (b + 0x9e3779b97f4a7c15ULL);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& word : state_) word = splitmix64(sm);
    have_cached_ = false;
    cached_ = 0.0;
  }

  // xoshiro256++
  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Uniform on (0,1): 53-bit mantissa, never exactly 0 or 1.
  double uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  // Standard normal by the Marsaglia polar method.  The rejection loop
  // consumes a variable number of engine draws, which is fine because
  // every consumer owns its whole stream.
  double normal() {
    if (have_cached_) {
      have_cached_ = false;
      return cached_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    cached_ = v * f;
    have_cached_ = true;
    return u * f;
  }

  double normal(double mean, double sd) { return mean + sd * normal(); }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::uint64_t state_[4];
  bool have_cached_;
  double cached_;
};

}  // namespace gcfest

#endif
