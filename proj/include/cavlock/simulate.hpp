#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "cavlock/linsys.hpp"

namespace cavlock {

/// Noise standard deviations for the three channels of the design model.
struct NoiseSpec {
  double process_std = 0.0;   ///< w1 at the plant input
  double sensor_std = 0.0;    ///< w2 on the measured output, per controller sample
  double integral_std = 0.0;  ///< w3 on the synthesized integral, per controller sample
  std::uint64_t seed = 0;
  /// Treat w1 as continuous white noise of intensity process_std^2: each plant
  /// sub-step draws with stddev process_std / sqrt(h). Otherwise process_std
  /// is used per sub-step as is.
  bool scale_process_by_rate = true;

  void validate() const;
};

enum class Injection {
  kPlantInput,  ///< r is added to u at the plant input (disturbance)
  kReference,   ///< r is a setpoint: the controller sees y1 - r
};

struct SimConfig {
  double duration_s = 0.1;
  int plant_substeps = 20;
  Injection injection = Injection::kPlantInput;
  bool keep_noise = false;
};

/// r(t) generators.
std::function<double(double)> step_signal(double amplitude, double t_step = 0.0);
std::function<double(double)> zero_signal();

/// One row per controller sample. z is the noiseless plant output, y the
/// measured output z + w2 that the controller sees.
struct SimTrace {
  double ts = 0.0;
  std::vector<double> t, r, u, y, z;
  std::vector<double> w1, w2, w3;  ///< filled when SimConfig::keep_noise

  std::size_t size() const { return t.size(); }
};

/// Fixed-step loop of a discrete two-input controller (inputs [y1, y2], y2
/// synthesized by trapezoidal accumulation of y1 plus w3) around a plant
/// sampled at Ts / plant_substeps (ZOH-held controller output).
SimTrace simulate_closed_loop(const DiscreteStateSpaceModel& plant_d,
                              const DiscreteStateSpaceModel& controller_d, const NoiseSpec& noise,
                              const std::function<double(double)>& r_signal,
                              const SimConfig& config);

/// Convenience overload: discretizes the continuous plant (ZOH) at the sub-step.
SimTrace simulate_closed_loop(const StateSpaceModel& plant,
                              const DiscreteStateSpaceModel& controller_d, const NoiseSpec& noise,
                              const std::function<double(double)>& r_signal,
                              const SimConfig& config);

struct StepMetrics {
  std::optional<double> rise_time;        ///< 10-90 % of the level change
  std::optional<double> settling_time_2pct;
  std::optional<double> overshoot_pct;
  double steady_state_value = 0.0;        ///< mean over the final 5 % of the trace
  double peak_value = 0.0;                ///< largest excursion from the initial value
  double peak_time = 0.0;
};

/// Step metrics of y. Times are measured from the first change of r (or t[0]).
/// The settling band is 2 % of the largest deviation from the final value.
StepMetrics step_response_metrics(const SimTrace& trace);
StepMetrics step_response_metrics(const std::vector<double>& t, const std::vector<double>& y,
                                  double t_step);

/// CSV with header t_s,r,u,y,z and 12 significant digits.
std::string format_trace_csv(const SimTrace& trace);

}  // namespace cavlock
