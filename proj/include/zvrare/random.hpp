#pragma once

#include <cstdint>
#include <random>

namespace zvrare {

/// Fixed stream tags so that substreams never collide across purposes.
enum class StreamTag : std::uint64_t {
  kPath = 1,
  kDensity = 2,
  kNormalizer = 3,
  kCrude = 4,
  kClassical = 5,
  kSelect = 6,
  kMisc = 7,
};

std::uint64_t splitmix64(std::uint64_t x);

/// Random stream: a 64-bit Mersenne twister with the draws this library needs.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0x5eedULL);

  /// Independent stream derived from (seed, tag, index); the mapping does not
  /// depend on thread count or scheduling.
  static Rng substream(std::uint64_t seed, StreamTag tag, std::uint64_t index);

  /// Uniform on the open interval (0, 1).
  double uniform();
  double normal();
  double normal(double mean, double sd) { return mean + sd * normal(); }
  /// Standard exponential (rate 1).
  double exponential();
  std::uint64_t next_u64() { return engine_(); }
  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

/// Draw from N(mean, sd²) conditioned on exceeding `lower`; exponential
/// rejection in the far tail.
double sample_truncated_normal_below(Rng& rng, double mean, double sd, double lower);

}  // namespace zvrare
