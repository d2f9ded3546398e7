#pragma once

#include <cstdint>
#include <random>

namespace dqedmd::rng {

// splitmix64 step; advances state and returns a mixed value.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Stable seed for substream (a, b) of a master seed. Chained mixing keeps
// distinct (a, b) pairs decorrelated without global state, so workers can
// derive their streams independently in any order.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a,
                                 std::uint64_t b) {
  std::uint64_t s = master;
  std::uint64_t h = splitmix64(s);
  s = h ^ a;
  h = splitmix64(s);
  s = h ^ b;
  return splitmix64(s);
}

// mt19937_64 with a fixed uint64 -> [0,1) mapping. std::uniform_real_distribution
// is implementation-defined, which would break byte-level reproducibility of
// result tables across standard libraries.
class Stream {
 public:
  explicit Stream(std::uint64_t seed) : eng_(seed) {}

  double uniform01() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) {
    return lo + (hi - lo) * uniform01();
  }

 private:
  std::mt19937_64 eng_;
};

}  // namespace dqedmd::rng
