#pragma once

#include <cstdint>
#include <random>

namespace dsqn {

// SplitMix64 step; used to whiten user seeds and derive per-node streams.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Collapse up to three stream labels (seed, node id, replication) into one
// well-mixed 64-bit seed so sibling streams are statistically independent.
inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0) {
  std::uint64_t s = a;
  std::uint64_t h = splitmix64(s);
  s ^= 0x100000001b3ULL * b;
  h ^= splitmix64(s);
  s ^= 0xc6a4a7935bd1e995ULL * c;
  h ^= splitmix64(s);
  return h;
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(mix_seed(seed)) {}

  std::uint64_t next() { return gen_(); }

  // Uniform integer in [0, n), rejection-sampled to avoid modulo bias.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = (~std::uint64_t{0}) - (~std::uint64_t{0}) % n;
    std::uint64_t r;
    do {
      r = gen_();
    } while (r >= limit);
    return r % n;
  }

  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double normal() { return normal_(gen_); }

 private:
  std::mt19937_64 gen_;
  std::normal_distribution<double> normal_;
};

}  // namespace dsqn
