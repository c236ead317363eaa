#pragma once

#include <cstdint>
#include <random>

namespace cavlock {

/// "cavlock-rng v1": one std::mt19937_64 engine per noise channel, seeded
/// with splitmix64(seed + (channel + 1) * 0x9E3779B97F4A7C15). Uniforms use
/// the top 53 bits of each draw; normals use the Marsaglia polar method.
/// Output is fixed by the standard engine definition, so a given seed yields
/// the same sequence on every conforming platform (up to libm rounding in
/// log/sqrt).
class NoiseStream {
 public:
  static constexpr int kVersion = 1;

  NoiseStream(std::uint64_t seed, std::uint64_t channel);

  /// Uniform in (0, 1).
  double uniform();
  double normal();

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace cavlock
