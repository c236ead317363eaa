#pragma once

#include <cstdint>
#include <vector>

#include "cavlock/linsys.hpp"

namespace cavlock {

/// One lightly damped actuator mode  g * w^2 / (s^2 + 2 zeta w s + w^2).
struct ResonantMode {
  double freq_hz = 0.0;
  double damping = 0.0;
  double gain = 0.0;
};

/// Actuator-plus-cavity stand-in: a sum of resonant modes (6 states for three
/// modes), single input u, single output y.
struct SyntheticPlantParams {
  std::vector<ResonantMode> modes;

  /// Modes near 520, 2100 and 5000 Hz.
  static SyntheticPlantParams standard();
  void validate() const;
};

StateSpaceModel synthetic_plant(const SyntheticPlantParams& params);

struct SyntheticGrid {
  double f_min_hz = 10.0;
  double f_max_hz = 6000.0;
  std::size_t points = 400;
  /// Relative complex Gaussian perturbation per sample (0 for exact data).
  double relative_noise = 0.0;
  std::uint64_t seed = 0;
};

/// Log-spaced samples of the model response, optionally perturbed by
/// relative complex Gaussian noise (noise channel 7 of the seed).
FrequencyResponseData sample_response(const StateSpaceModel& model, const SyntheticGrid& grid);

}  // namespace cavlock
