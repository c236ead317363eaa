#pragma once

#include <optional>

#include "cavlock/linsys.hpp"

namespace cavlock {

/// Zero-order-hold equivalent: Ad = exp(A Ts), Bd = int_0^Ts exp(A t) dt B.
DiscreteStateSpaceModel discretize_zoh(const StateSpaceModel& model, double ts);

/// Bilinear (Tustin) map s = a (z - 1) / (z + 1) with a = 2 / Ts, or with
/// a = w_p / tan(w_p Ts / 2) when prewarping at prewarp_hz.
DiscreteStateSpaceModel discretize_tustin(const StateSpaceModel& model, double ts,
                                          std::optional<double> prewarp_hz = std::nullopt);

}  // namespace cavlock
