#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "bace/error.hpp"
#include "bace/types.hpp"

namespace bace {

// SplitMix64 step; used to derive independent, well-separated seed streams
// from one user-facing seed.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t s = seed ^ (0xA0761D6478BD642Full + stream * 0xE7037ED1A0B428DBull);
  splitmix64(s);
  return splitmix64(s);
}

// Deterministic pseudo-random source. The engine (mt19937_64) and every
// mapping below are fixed by this implementation, so a given seed yields the
// same draw sequence on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform draw on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double low, double high) {
    if (!(low < high)) throw ConfigError("uniform range requires low < high");
    double v = low + (high - low) * uniform();
    if (v >= high) v = std::nextafter(high, low);
    return v;
  }

  Vec uniform_vec(Index dim, double low, double high) {
    if (dim < 1) throw ConfigError("uniform_vec requires dim >= 1");
    Vec out(dim);
    for (Index i = 0; i < dim; ++i) out[i] = uniform(low, high);
    return out;
  }

  // Standard normal via Box-Muller; the spare value is cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = 1.0 - uniform();  // (0, 1]
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double theta = 2.0 * M_PI * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  // Uniform index in [0, n).
  std::size_t index(std::size_t n) {
    if (n == 0) throw ConfigError("index requires n >= 1");
    return static_cast<std::size_t>(engine_() % n);
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace bace
