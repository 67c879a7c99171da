#include "zvrare/random.hpp"

#include <cmath>

namespace zvrare {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Rng::Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

Rng Rng::substream(std::uint64_t seed, StreamTag tag, std::uint64_t index) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ static_cast<std::uint64_t>(tag));
  h = splitmix64(h ^ index);
  return Rng(h);
}

double Rng::uniform() {
  // 53 random bits, shifted half a step off zero: strictly inside (0, 1).
  return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
}

double Rng::normal() { return normal_(engine_); }

double Rng::exponential() { return -std::log(uniform()); }

double sample_truncated_normal_below(Rng& rng, double mean, double sd, double lower) {
  const double alpha = (lower - mean) / sd;
  if (alpha < 0.5) {
    // Acceptance probability at least Φ̄(0.5) ≈ 0.31.
    for (;;) {
      const double z = rng.normal();
      if (z > alpha) return mean + sd * z;
    }
  }
  // Exponential proposal with the optimal rate for the truncation point.
  const double lambda = 0.5 * (alpha + std::sqrt(alpha * alpha + 4.0));
  for (;;) {
    const double z = alpha + rng.exponential() / lambda;
    const double d = z - lambda;
    if (std::log(rng.uniform()) <= -0.5 * d * d) return mean + sd * z;
  }
}

}  // namespace zvrare
