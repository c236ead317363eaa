#include "cavlock/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "cavlock/discretize.hpp"
#include "cavlock/errors.hpp"
#include "cavlock/rng.hpp"

namespace cavlock {

void NoiseSpec::validate() const {
  for (double v : {process_std, sensor_std, integral_std})
    if (!(v >= 0.0) || !std::isfinite(v)) throw InputError("noise standard deviations must be >= 0");
}

std::function<double(double)> step_signal(double amplitude, double t_step) {
  return [amplitude, t_step](double t) { return t >= t_step ? amplitude : 0.0; };
}

std::function<double(double)> zero_signal() {
  return [](double) { return 0.0; };
}

SimTrace simulate_closed_loop(const DiscreteStateSpaceModel& plant_d,
                              const DiscreteStateSpaceModel& controller_d, const NoiseSpec& noise,
                              const std::function<double(double)>& r_signal,
                              const SimConfig& config) {
  noise.validate();
  if (config.plant_substeps < 1) throw InputError("plant sub-step count must be >= 1");
  if (!(config.duration_s > 0.0)) throw InputError("simulation duration must be positive");
  const double ts = controller_d.ts();
  const double h = ts / config.plant_substeps;
  if (std::abs(plant_d.ts() - h) > 1e-9 * h)
    throw InputError("plant sample period must equal controller period / plant_substeps");
  if (plant_d.inputs() != 1 || plant_d.outputs() != 1)
    throw InputError("simulation expects a SISO plant (u -> y)");
  if (controller_d.inputs() != 2 || controller_d.outputs() != 1)
    throw InputError("simulation expects a controller with inputs [y1, y2] and output u");

  NoiseStream w1_stream(noise.seed, 0), w2_stream(noise.seed, 1), w3_stream(noise.seed, 2);
  const double w1_std =
      noise.scale_process_by_rate ? noise.process_std / std::sqrt(h) : noise.process_std;

  const auto steps = static_cast<std::size_t>(std::llround(config.duration_s / ts)) + 1;
  SimTrace trace;
  trace.ts = ts;
  for (auto* v : {&trace.t, &trace.r, &trace.u, &trace.y, &trace.z}) v->reserve(steps);

  Vector xp = Vector::Zero(plant_d.states());
  Vector xc = Vector::Zero(controller_d.states());
  double u_held = 0.0, integral = 0.0, y1_prev = 0.0, w1_last = 0.0;
  Vector meas(2);
  for (std::size_t k = 0; k < steps; ++k) {
    const double t = static_cast<double>(k) * ts;
    const double r = r_signal(t);
    const double plant_in_prev = u_held + (config.injection == Injection::kPlantInput ? r : 0.0);
    const double z = (plant_d.C() * xp)(0) + plant_d.D()(0, 0) * (plant_in_prev + w1_last);
    const double w2 = noise.sensor_std > 0.0 ? noise.sensor_std * w2_stream.normal() : 0.0;
    const double w3 = noise.integral_std > 0.0 ? noise.integral_std * w3_stream.normal() : 0.0;
    double y1 = z + w2;
    if (config.injection == Injection::kReference) y1 -= r;
    if (k > 0) integral += 0.5 * ts * (y1 + y1_prev);
    y1_prev = y1;
    meas << y1, integral + w3;

    const double u = (controller_d.C() * xc + controller_d.D() * meas)(0);
    xc = controller_d.A() * xc + controller_d.B() * meas;
    u_held = u;

    if (!std::isfinite(u) || !std::isfinite(z) || !xc.allFinite() || !xp.allFinite()) {
      std::ostringstream msg;
      msg << "non-finite value in closed-loop simulation at step " << k << " (t = " << t << " s)";
      throw NumericalError(msg.str());
    }
    trace.t.push_back(t);
    trace.r.push_back(r);
    trace.u.push_back(u);
    trace.y.push_back(y1 + (config.injection == Injection::kReference ? r : 0.0));
    trace.z.push_back(z);
    if (config.keep_noise) {
      trace.w2.push_back(w2);
      trace.w3.push_back(w3);
    }

    const double plant_in = u + (config.injection == Injection::kPlantInput ? r : 0.0);
    for (int j = 0; j < config.plant_substeps; ++j) {
      const double w1 = w1_std > 0.0 ? w1_std * w1_stream.normal() : 0.0;
      xp = plant_d.A() * xp + plant_d.B() * (plant_in + w1);
      w1_last = w1;
      if (config.keep_noise && j == 0) trace.w1.push_back(w1);
    }
  }
  return trace;
}

SimTrace simulate_closed_loop(const StateSpaceModel& plant,
                              const DiscreteStateSpaceModel& controller_d, const NoiseSpec& noise,
                              const std::function<double(double)>& r_signal,
                              const SimConfig& config) {
  if (config.plant_substeps < 1) throw InputError("plant sub-step count must be >= 1");
  const DiscreteStateSpaceModel plant_d =
      discretize_zoh(plant, controller_d.ts() / config.plant_substeps);
  return simulate_closed_loop(plant_d, controller_d, noise, r_signal, config);
}

StepMetrics step_response_metrics(const std::vector<double>& t, const std::vector<double>& y,
                                  double t_step) {
  if (t.size() != y.size() || t.empty()) throw InputError("step metrics: empty or ragged trace");
  const std::size_t n = y.size();
  std::size_t start = 0;
  while (start < n && t[start] < t_step) ++start;
  if (start == n) throw InputError("step metrics: step occurs after the end of the trace");

  const std::size_t tail = std::max<std::size_t>(1, n / 20);
  const std::size_t tail_begin = n - tail;
  double final_value = 0.0;
  for (std::size_t k = tail_begin; k < n; ++k) final_value += y[k];
  final_value /= static_cast<double>(tail);

  StepMetrics m;
  m.steady_state_value = final_value;
  const double initial = y[start];
  double worst_dev = 0.0;
  for (std::size_t k = start; k < n; ++k) {
    worst_dev = std::max(worst_dev, std::abs(y[k] - final_value));
    if (std::abs(y[k] - initial) > std::abs(m.peak_value - initial) || k == start) {
      m.peak_value = y[k];
      m.peak_time = t[k] - t[start];
    }
  }
  if (worst_dev == 0.0) {
    m.settling_time_2pct = 0.0;
    m.overshoot_pct = 0.0;
    m.rise_time = std::nullopt;
    return m;
  }

  const double band = 0.02 * worst_dev;
  std::size_t last_out = start;
  bool any_out = false;
  for (std::size_t k = start; k < n; ++k)
    if (std::abs(y[k] - final_value) > band) {
      last_out = k;
      any_out = true;
    }
  if (!any_out) {
    m.settling_time_2pct = 0.0;
  } else if (last_out + 1 < tail_begin) {
    m.settling_time_2pct = t[last_out + 1] - t[start];
  }

  const double change = final_value - initial;
  if (std::abs(change) > 0.02 * worst_dev) {
    const double dir = change > 0.0 ? 1.0 : -1.0;
    double extreme = 0.0;
    for (std::size_t k = start; k < n; ++k) extreme = std::max(extreme, dir * (y[k] - final_value));
    m.overshoot_pct = 100.0 * extreme / std::abs(change);
    std::optional<double> t10, t90;
    for (std::size_t k = start; k < n; ++k) {
      const double frac = (y[k] - initial) / change;
      if (!t10 && frac >= 0.1) t10 = t[k];
      if (!t90 && frac >= 0.9) {
        t90 = t[k];
        break;
      }
    }
    if (t10 && t90) m.rise_time = *t90 - *t10;
  }
  return m;
}

StepMetrics step_response_metrics(const SimTrace& trace) {
  double t_step = trace.t.empty() ? 0.0 : trace.t.front();
  for (std::size_t k = 1; k < trace.r.size(); ++k)
    if (trace.r[k] != trace.r[0]) {
      t_step = trace.t[k];
      break;
    }
  if (!trace.r.empty() && trace.r[0] != 0.0) t_step = trace.t.front();
  return step_response_metrics(trace.t, trace.y, t_step);
}

std::string format_trace_csv(const SimTrace& trace) {
  std::string out = "t_s,r,u,y,z\n";
  out.reserve(trace.size() * 80);
  char buf[160];
  for (std::size_t k = 0; k < trace.size(); ++k) {
    std::snprintf(buf, sizeof buf, "%.12g,%.12g,%.12g,%.12g,%.12g\n", trace.t[k], trace.r[k],
                  trace.u[k], trace.y[k], trace.z[k]);
    out += buf;
  }
  return out;
}

}  // namespace cavlock
