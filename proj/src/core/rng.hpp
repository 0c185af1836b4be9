#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace hmor {

// All stochastic stages draw from substreams derived from the single run
// seed, so schedules and parallel merges cannot change the draws. The
// mersenne engine is fully specified by the standard and the value
// transforms below avoid the implementation-defined distributions.
class RngStream {
public:
  explicit RngStream(uint64_t seed) : engine_(seed) {}

  /// Substream k of a root seed (splitmix64 of seed xor golden-ratio step).
  static RngStream substream(uint64_t seed, uint64_t k) {
    uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (k + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    z = z ^ (z >> 31);
    return RngStream(z);
  }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller (fresh pair every second call).
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * M_PI * u2;
    spare_ = radius * std::sin(angle);
    have_spare_ = true;
    return radius * std::cos(angle);
  }

  double normal(double mean, double std) { return mean + std * normal(); }

private:
  std::mt19937_64 engine_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace hmor
