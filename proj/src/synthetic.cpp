#include "cavlock/synthetic.hpp"

#include <cmath>
#include <numbers>

#include "cavlock/errors.hpp"
#include "cavlock/rng.hpp"

namespace cavlock {

SyntheticPlantParams SyntheticPlantParams::standard() {
  SyntheticPlantParams p;
  p.modes = {{520.0, 0.05, 1.0}, {2100.0, 0.03, 0.3}, {5000.0, 0.02, 0.1}};
  return p;
}

void SyntheticPlantParams::validate() const {
  if (modes.empty()) throw InputError("synthetic plant needs at least one mode");
  for (const auto& m : modes) {
    if (!(m.freq_hz > 0.0) || !(m.damping > 0.0) || !std::isfinite(m.gain))
      throw InputError("synthetic mode requires freq_hz > 0, damping > 0 and a finite gain");
  }
}

StateSpaceModel synthetic_plant(const SyntheticPlantParams& params) {
  params.validate();
  const Index n = 2 * static_cast<Index>(params.modes.size());
  Matrix a = Matrix::Zero(n, n), b = Matrix::Zero(n, 1), c = Matrix::Zero(1, n);
  for (std::size_t i = 0; i < params.modes.size(); ++i) {
    const auto& m = params.modes[i];
    const double w = 2.0 * std::numbers::pi * m.freq_hz;
    const Index k = 2 * static_cast<Index>(i);
    // Scaled companion block: x1' = w x2, x2' = -w x1 - 2 zeta w x2 + w u, y = g x1.
    a(k, k + 1) = w;
    a(k + 1, k) = -w;
    a(k + 1, k + 1) = -2.0 * m.damping * w;
    b(k + 1, 0) = w;
    c(0, k) = m.gain;
  }
  return StateSpaceModel(a, b, c, Matrix::Zero(1, 1), {"u"}, {"y"});
}

FrequencyResponseData sample_response(const StateSpaceModel& model, const SyntheticGrid& grid) {
  if (!(grid.f_min_hz > 0.0) || !(grid.f_max_hz > grid.f_min_hz) || grid.points < 2)
    throw InputError("synthetic grid requires 0 < f_min < f_max and at least 2 points");
  if (!(grid.relative_noise >= 0.0)) throw InputError("relative noise must be >= 0");
  auto freqs = log_space(grid.f_min_hz, grid.f_max_hz, grid.points);
  FrequencyResponseData clean = frequency_response(model, freqs);
  if (grid.relative_noise == 0.0) return clean;
  NoiseStream stream(grid.seed, 7);
  std::vector<CMatrix> noisy;
  noisy.reserve(clean.size());
  const double scale = grid.relative_noise / std::sqrt(2.0);
  for (const auto& h : clean.response()) {
    CMatrix out = h;
    for (Index i = 0; i < h.rows(); ++i)
      for (Index j = 0; j < h.cols(); ++j) {
        const double re = stream.normal(), im = stream.normal();
        out(i, j) += std::abs(h(i, j)) * scale * Complex(re, im);
      }
    noisy.push_back(out);
  }
  return FrequencyResponseData(freqs, std::move(noisy));
}

}  // namespace cavlock
