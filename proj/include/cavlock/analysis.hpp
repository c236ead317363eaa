#pragma once

#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cavlock/linsys.hpp"

namespace cavlock {

struct BodeData {
  std::vector<double> freqs_hz;
  std::vector<double> mag_db;
  /// Unwrapped along the grid, anchored at the low-frequency asymptote.
  std::vector<double> phase_deg;
};

/// Bode data of one input/output channel.
BodeData bode(const StateSpaceModel& model, const std::vector<double>& freqs_hz, Index output = 0,
              Index input = 0);
/// Discrete model evaluated on z = exp(i w Ts); grid must stay below Nyquist.
BodeData bode(const DiscreteStateSpaceModel& model, const std::vector<double>& freqs_hz,
              Index output = 0, Index input = 0);

/// CSV with header freq_hz,mag_db,phase_deg.
std::string format_bode_csv(const BodeData& data);

/// Loop gain broken at the measurement: L = P C for u = -C y.
StateSpaceModel loop_gain(const StateSpaceModel& plant, const StateSpaceModel& controller);

struct MarginCrossing {
  double freq_hz = 0.0;
  /// Phase margin (deg) for gain crossings, gain margin (dB) for phase crossings.
  double margin = 0.0;
};

struct MarginReport {
  double gain_margin_db = std::numeric_limits<double>::infinity();
  double phase_margin_deg = std::numeric_limits<double>::infinity();
  std::optional<double> gain_crossover_hz;   ///< where |L| = 1 (worst phase margin)
  std::optional<double> phase_crossover_hz;  ///< where phase = -180 (worst gain margin)
  std::vector<MarginCrossing> gain_crossings;
  std::vector<MarginCrossing> phase_crossings;
};

struct MarginOptions {
  /// Grid bounds in rad/s; 0 picks them from the loop dynamics.
  double omega_min = 0.0;
  double omega_max = 0.0;
  std::size_t points_per_decade = 400;
};

MarginReport margins(const StateSpaceModel& loop, const MarginOptions& options = {});
/// Discrete loop, searched up to the Nyquist frequency.
MarginReport margins(const DiscreteStateSpaceModel& loop, const MarginOptions& options = {});

/// Margins of an arbitrary SISO frequency function on [omega_min, omega_max].
MarginReport margins_of(const std::function<Complex(double)>& loop_at, double omega_min,
                        double omega_max, std::size_t points_per_decade);

/// S = (I + P C)^{-1}, T = P C (I + P C)^{-1} for negative feedback u = -C y.
std::pair<StateSpaceModel, StateSpaceModel> sensitivity(const StateSpaceModel& plant,
                                                        const StateSpaceModel& controller);

}  // namespace cavlock
