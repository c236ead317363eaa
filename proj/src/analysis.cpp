#include "cavlock/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "cavlock/errors.hpp"

namespace cavlock {

namespace {

constexpr double kDeg = 180.0 / std::numbers::pi;

double wrap180(double deg) {
  double x = std::fmod(deg + 180.0, 360.0);
  if (x <= 0.0) x += 360.0;
  return x - 180.0;
}

// Phase along the grid without jumps; the first sample is shifted by a
// multiple of 360 deg toward the slope-implied asymptote -90 k.
std::vector<double> unwrapped_phase(const std::vector<Complex>& h, const std::vector<double>& w) {
  std::vector<double> phase(h.size());
  if (h.empty()) return phase;
  phase[0] = std::arg(h[0]) * kDeg;
  if (h.size() > 1 && std::abs(h[0]) > 0.0 && std::abs(h[1]) > 0.0) {
    const double slope = std::log10(std::abs(h[1]) / std::abs(h[0])) / std::log10(w[1] / w[0]);
    const double asymptote = 90.0 * std::round(slope);
    phase[0] += 360.0 * std::round((asymptote - phase[0]) / 360.0);
  }
  for (std::size_t k = 1; k < h.size(); ++k) {
    double step = std::arg(h[k]) * kDeg - std::arg(h[k - 1]) * kDeg;
    step -= 360.0 * std::round(step / 360.0);
    phase[k] = phase[k - 1] + step;
  }
  return phase;
}

template <typename Model>
BodeData bode_impl(const Model& model, const std::vector<double>& freqs_hz, Index output,
                   Index input) {
  if (freqs_hz.empty()) throw InputError("bode: frequency grid is empty");
  if (output < 0 || output >= model.outputs() || input < 0 || input >= model.inputs())
    throw InputError("bode: channel index out of range");
  std::vector<Complex> h;
  std::vector<double> w;
  for (double f : freqs_hz) {
    w.push_back(2.0 * std::numbers::pi * f);
    h.push_back(eval_response(model, w.back())(output, input));
  }
  BodeData out;
  out.freqs_hz = freqs_hz;
  for (const Complex& v : h) out.mag_db.push_back(20.0 * std::log10(std::abs(v)));
  out.phase_deg = unwrapped_phase(h, w);
  return out;
}

template <typename F>
double bisect(F&& f, double lo, double hi) {
  double flo = f(lo);
  for (int i = 0; i < 200 && hi / lo > 1.0 + 1e-15; ++i) {
    const double mid = std::sqrt(lo * hi);
    const double fm = f(mid);
    if ((fm < 0.0) == (flo < 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return std::sqrt(lo * hi);
}

}  // namespace

BodeData bode(const StateSpaceModel& model, const std::vector<double>& freqs_hz, Index output,
              Index input) {
  return bode_impl(model, freqs_hz, output, input);
}

BodeData bode(const DiscreteStateSpaceModel& model, const std::vector<double>& freqs_hz,
              Index output, Index input) {
  const double nyquist = 0.5 / model.ts();
  for (double f : freqs_hz)
    if (f >= nyquist) throw InputError("bode: discrete grid must stay below the Nyquist frequency");
  return bode_impl(model, freqs_hz, output, input);
}

std::string format_bode_csv(const BodeData& data) {
  std::string out = "freq_hz,mag_db,phase_deg\n";
  char buf[128];
  for (std::size_t k = 0; k < data.freqs_hz.size(); ++k) {
    std::snprintf(buf, sizeof buf, "%.12g,%.12g,%.12g\n", data.freqs_hz[k], data.mag_db[k],
                  data.phase_deg[k]);
    out += buf;
  }
  return out;
}

StateSpaceModel loop_gain(const StateSpaceModel& plant, const StateSpaceModel& controller) {
  return series(controller, plant);
}

MarginReport margins_of(const std::function<Complex(double)>& loop_at, double omega_min,
                        double omega_max, std::size_t points_per_decade) {
  if (!(omega_min > 0.0) || !(omega_max > omega_min)) throw InputError("margins: invalid frequency range");
  const double decades = std::log10(omega_max / omega_min);
  const auto count = static_cast<std::size_t>(std::ceil(decades * static_cast<double>(points_per_decade))) + 2;
  const std::vector<double> w = log_space(omega_min, omega_max, count);
  std::vector<Complex> h(w.size());
  for (std::size_t k = 0; k < w.size(); ++k) h[k] = loop_at(w[k]);

  MarginReport report;
  auto log_mag = [&](double x) { return std::log(std::abs(loop_at(x))); };
  auto imag_part = [&](double x) { return loop_at(x).imag(); };
  for (std::size_t k = 0; k + 1 < w.size(); ++k) {
    const double m0 = std::log(std::abs(h[k])), m1 = std::log(std::abs(h[k + 1]));
    if ((m0 < 0.0) != (m1 < 0.0)) {
      const double wc = m0 == 0.0 ? w[k] : bisect(log_mag, w[k], w[k + 1]);
      const double pm = wrap180(std::arg(loop_at(wc)) * kDeg + 180.0);
      report.gain_crossings.push_back({wc / (2.0 * std::numbers::pi), pm});
    }
    // Phase -180 (mod 360): L is real and negative.
    const double i0 = h[k].imag(), i1 = h[k + 1].imag();
    if ((i0 < 0.0) != (i1 < 0.0) && (h[k].real() < 0.0 || h[k + 1].real() < 0.0)) {
      const double wp = i0 == 0.0 ? w[k] : bisect(imag_part, w[k], w[k + 1]);
      const Complex at = loop_at(wp);
      if (at.real() < 0.0)
        report.phase_crossings.push_back(
            {wp / (2.0 * std::numbers::pi), -20.0 * std::log10(std::abs(at))});
    }
  }

  for (const auto& c : report.gain_crossings) {
    if (!report.gain_crossover_hz || c.margin < report.phase_margin_deg) {
      report.phase_margin_deg = c.margin;
      report.gain_crossover_hz = c.freq_hz;
    }
  }
  // Worst gain margin: smallest positive one; otherwise the one closest to 0 dB.
  for (const auto& c : report.phase_crossings) {
    const bool better = !report.phase_crossover_hz ||
                        (c.margin > 0.0 && (report.gain_margin_db <= 0.0 || c.margin < report.gain_margin_db)) ||
                        (c.margin <= 0.0 && report.gain_margin_db <= 0.0 &&
                         std::abs(c.margin) < std::abs(report.gain_margin_db));
    if (better) {
      report.gain_margin_db = c.margin;
      report.phase_crossover_hz = c.freq_hz;
    }
  }
  return report;
}

MarginReport margins(const StateSpaceModel& loop, const MarginOptions& options) {
  if (loop.inputs() != 1 || loop.outputs() != 1) throw InputError("margins: loop gain must be SISO");
  double lo = options.omega_min, hi = options.omega_max;
  if (!(lo > 0.0) || !(hi > 0.0)) {
    double pmin = std::numeric_limits<double>::infinity(), pmax = 0.0;
    for (const Complex& p : poles(loop)) {
      const double mag = std::abs(p);
      if (mag > 1e-9) {
        pmin = std::min(pmin, mag);
        pmax = std::max(pmax, mag);
      }
    }
    if (!(pmax > 0.0)) pmin = pmax = 1.0;
    if (!(lo > 0.0)) lo = 1e-3 * pmin;
    if (!(hi > 0.0)) hi = 1e3 * pmax;
    auto gain = [&](double w) { return std::abs(eval_response(loop, w)(0, 0)); };
    for (int i = 0; i < 12 && gain(hi) > 1.0; ++i) hi *= 10.0;
    for (int i = 0; i < 12 && gain(lo) < 1.0 && gain(lo) > 0.0; ++i) lo /= 10.0;
  }
  return margins_of([&](double w) { return eval_response(loop, w)(0, 0); }, lo, hi,
                    options.points_per_decade);
}

MarginReport margins(const DiscreteStateSpaceModel& loop, const MarginOptions& options) {
  if (loop.inputs() != 1 || loop.outputs() != 1) throw InputError("margins: loop gain must be SISO");
  const double nyquist = std::numbers::pi / loop.ts();
  double hi = options.omega_max > 0.0 ? std::min(options.omega_max, nyquist) : nyquist;
  hi *= 1.0 - 1e-9;
  double lo = options.omega_min > 0.0 ? options.omega_min : hi * 1e-6;
  return margins_of([&](double w) { return eval_response(loop, w)(0, 0); }, lo, hi,
                    options.points_per_decade);
}

std::pair<StateSpaceModel, StateSpaceModel> sensitivity(const StateSpaceModel& plant,
                                                        const StateSpaceModel& controller) {
  StateSpaceModel t = feedback(plant, controller, -1);
  const Index p = t.outputs();
  StateSpaceModel s(t.A(), t.B(), -t.C(), Matrix::Identity(p, p) - t.D(), t.input_labels(),
                    t.output_labels());
  return {std::move(s), std::move(t)};
}

}  // namespace cavlock
