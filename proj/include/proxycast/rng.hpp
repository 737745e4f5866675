#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace proxycast {

// SplitMix64 finalizer. Substream seeds are derived as mix_seed(seed, tag)
// so that trials, matrix draws and forecaster initializations get
// independent, reproducible streams regardless of execution order.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t tag) {
  std::uint64_t z = seed + (tag + 1) * 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// Seeded random stream: std::mt19937_64 plus portable samplers. The standard
// distribution objects are implementation-defined, so every draw here is
// built directly from raw 64-bit engine output:
//   uniform():     (x >> 11) * 2^-53            one engine call
//   uniform_int(n): floor(128-bit x*n >> 64)    one engine call
//   categorical(p): inverse CDF walk on uniform() one engine call
// split(tag) derives an independent stream from the *seed*, not the current
// engine state, so splitting commutes with consumption.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64() { return engine_(); }

  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  int uniform_int(int n) {
    const auto wide = static_cast<unsigned __int128>(engine_()) *
                      static_cast<std::uint64_t>(n);
    return static_cast<int>(wide >> 64);
  }

  int categorical(std::span<const double> probs) {
    const double u = uniform();
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < probs.size(); ++i) {
      acc += probs[i];
      if (u < acc) return static_cast<int>(i);
    }
    return static_cast<int>(probs.size()) - 1;
  }

  Rng split(std::uint64_t tag) const { return Rng(mix_seed(seed_, tag)); }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace proxycast
