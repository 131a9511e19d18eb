#pragma once

#include <cmath>
#include <cstdint>

namespace sizeunfold {

// Counter-based generator in the SplitMix64 family: draw k is a bijective
// 64-bit mix of seed + (k+1) * golden-ratio gamma, so the state is just
// (seed, counter).  Worker and replication streams come from split(), which
// reseeds a child through the same finalizer.  Constants are the standard
// SplitMix64 ones; the exact sequences are part of the reproducibility
// contract (see README).
class Rng {
public:
  explicit Rng(std::uint64_t seed) : seed_(seed) {}

  static std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  std::uint64_t next_u64() {
    return mix64(seed_ + ++counter_ * 0x9E3779B97F4A7C15ull);
  }

  // uniform on [0,1), 53-bit resolution
  double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  // Box-Muller using two fresh uniforms per draw; no cached second value,
  // so the stream position stays a plain counter.
  double normal() {
    double u1 = double((next_u64() >> 11) + 1) * 0x1.0p-53;  // (0,1]
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
  }

  double exponential() {
    double u = double((next_u64() >> 11) + 1) * 0x1.0p-53;  // (0,1]
    return -std::log(u);
  }

  // Independent child stream; used for worker shards and replication seeds.
  Rng split(std::uint64_t stream) const {
    return Rng(mix64((seed_ ^ 0xA3EC647659359ACDull) +
                     stream * 0x9E3779B97F4A7C15ull));
  }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t counter() const { return counter_; }

private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

}  // namespace sizeunfold
