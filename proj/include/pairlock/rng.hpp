#ifndef PAIRLOCK_RNG_HPP
#define PAIRLOCK_RNG_HPP

#include <cstdint>

namespace pairlock {

// Deterministic 64-bit generator: xoshiro256** (Blackman & Vigna), state
// seeded through splitmix64 so that nearby seeds give unrelated streams.
// Used everywhere randomness is needed (init, dropout, shuffling, synth)
// so that runs are reproducible bit-for-bit across platforms.
class Rng {
 public:
  explicit Rng(uint64_t seed) {
    uint64_t x = seed;
    for (auto& si : s_) si = splitmix64(x);
  }

  uint64_t next_u64() {
    const uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n).
  uint64_t below(uint64_t n) { return n ? next_u64() % n : 0; }

  // Independent child stream, e.g. per scene: derive(seed, scene_index).
  static Rng derive(uint64_t seed, uint64_t stream) {
    uint64_t x = seed;
    const uint64_t a = splitmix64(x);
    x = stream + 0x9e3779b97f4a7c15ULL;
    const uint64_t b = splitmix64(x);
    return Rng(a ^ (b * 0xff51afd7ed558ccdULL));
  }

 private:
  static uint64_t rotl(uint64_t v, int k) { return (v << k) | (v >> (64 - k)); }

  static uint64_t splitmix64(uint64_t& x) {
    uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  uint64_t s_[4];
};

}  // namespace pairlock

#endif  // PAIRLOCK_RNG_HPP
