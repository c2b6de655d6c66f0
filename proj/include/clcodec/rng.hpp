#ifndef CLCODEC_RNG_HPP
#define CLCODEC_RNG_HPP

#include <cstdint>
#include <random>

namespace clc {

inline uint64_t splitmix64(uint64_t& state) {
  uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Deterministic generator with portable floating-point mapping. The std
// distributions are implementation-defined, so all real draws go through
// the explicit 53-bit path below.
class Rng {
 public:
  explicit Rng(uint64_t seed) : gen_(seed) {}

  uint64_t next_u64() { return gen_(); }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  // Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n).
  uint64_t below(uint64_t n) { return n ? gen_() % n : 0; }

  double normal() {
    // Box-Muller; second value discarded to keep draw count predictable.
    double u1 = uniform();
    double u2 = uniform();
    if (u1 < 1e-300) u1 = 1e-300;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

 private:
  std::mt19937_64 gen_;
};

// Stream seed for (base seed, step): resuming a run at step k reproduces the
// exact per-step randomness without serializing generator state.
inline uint64_t step_seed(uint64_t seed, uint64_t step) {
  uint64_t s = seed ^ (0xA0761D6478BD642FULL + step * 0xE7037ED1A0B428DBULL);
  return splitmix64(s);
}

}  // namespace clc

#endif
