#include "cavlock/cavity.hpp"

#include <cmath>
#include <numbers>

#include "cavlock/errors.hpp"

namespace cavlock {

void CavityParams::validate() const {
  if (!(kappa0 > 0.0) || !(kappa1 > 0.0) || !(kappaL > 0.0))
    throw InputError("cavity coupling rates kappa0, kappa1, kappaL must be positive");
  for (double v : {alpha, phi, k2, beta})
    if (!std::isfinite(v)) throw InputError("cavity parameters must be finite");
}

CavityParams CavityParams::demo() {
  const double kappa = 2.0 * (2.0 * std::numbers::pi * 1e5);
  CavityParams p;
  p.kappa0 = 0.5 * kappa;
  p.kappa1 = 0.3 * kappa;
  p.kappaL = 0.2 * kappa;
  p.alpha = 1.0;
  p.phi = std::numbers::pi / 2.0;
  p.k2 = 1.0;
  p.beta = 1.0;
  return p;
}

void DetuningParams::validate() const {
  if (q < 1) throw InputError("longitudinal mode number q must be >= 1");
  if (!(length_m > 0.0)) throw InputError("cavity length must be positive");
  if (!(n_index > 0.0)) throw InputError("refractive index must be positive");
  if (!(c > 0.0)) throw InputError("speed of light must be positive");
}

double detuning(const DetuningParams& p) {
  p.validate();
  return static_cast<double>(p.q) * 2.0 * std::numbers::pi * p.c / (p.n_index * p.length_m) -
         p.omega_laser;
}

StateSpaceModel build_cavity_model(const CavityParams& p) {
  p.validate();
  const double kappa = p.kappa();
  const double s0 = std::sqrt(p.kappa0), s1 = std::sqrt(p.kappa1), sl = std::sqrt(p.kappaL);
  const double cphi = std::cos(p.phi), sphi = std::sin(p.phi);

  Matrix a = Matrix::Identity(2, 2) * (-kappa / 2.0);
  Matrix b = Matrix::Zero(2, 8);
  b(1, 0) = 2.0 * p.alpha;
  // rotation by phi on (q0, p0)
  b.block(0, 1, 2, 2) << -s0 * cphi, s0 * sphi, -s0 * sphi, -s0 * cphi;
  b.block(0, 3, 2, 2) = -s1 * Matrix::Identity(2, 2);
  b.block(0, 5, 2, 2) = -sl * Matrix::Identity(2, 2);

  Matrix c(2, 2);
  c << p.k2 * s0 * cphi, p.k2 * s0 * sphi, p.k2 * s0 * cphi, p.k2 * s0 * sphi;
  Matrix d = Matrix::Zero(2, 8);
  d(1, 1) = p.k2;  // homodyne feedthrough of q0
  d(1, 7) = 1.0;   // electronic noise w2
  return {a, b, c, d, {"delta", "q0", "p0", "q1", "p1", "qL", "pL", "w2"}, {"z", "y"}};
}

double cavity_dc_gain(const CavityParams& p) {
  return 4.0 * p.alpha * p.k2 * std::sqrt(p.kappa0) * std::sin(p.phi) / p.kappa();
}

AugmentedPlant augment_integrator(const StateSpaceModel& plant, Index z_output) {
  if (plant.inputs() != 1) throw InputError("integrator augmentation expects a single-input plant");
  if (z_output < 0 || z_output >= plant.outputs())
    throw InputError("integrator augmentation: z output index out of range");
  const Index n = plant.states();
  const Matrix cz = plant.C().row(z_output);

  Matrix a = Matrix::Zero(n + 1, n + 1);
  a.topLeftCorner(n, n) = plant.A();
  a.bottomLeftCorner(1, n) = cz;
  Matrix b = Matrix::Zero(n + 1, 1);
  b.topRows(n) = plant.B();
  b(n, 0) = plant.D()(z_output, 0);  // zero for strictly proper plants
  Matrix c = Matrix::Zero(2, n + 1);
  c.topLeftCorner(1, n) = cz;
  c(1, n) = 1.0;
  Matrix d = Matrix::Zero(2, 1);
  d(0, 0) = plant.D()(z_output, 0);

  return {StateSpaceModel(a, b, c, d, plant.input_labels(), {"y1", "y2"}), n};
}

StateSpaceModel antialias_filter(int order, double corner_hz) {
  if (order < 1) throw InputError("filter order must be >= 1");
  if (!(corner_hz > 0.0)) throw InputError("filter corner frequency must be positive");
  const double wc = 2.0 * std::numbers::pi * corner_hz;

  StateSpaceModel chain = StateSpaceModel::static_gain(Matrix::Identity(1, 1));
  bool first = true;
  auto append = [&](const StateSpaceModel& section) {
    chain = first ? section : series(chain, section);
    first = false;
  };
  // Second-order sections wc^2 / (s^2 + 2 zeta wc s + wc^2), Butterworth pole angles.
  for (int k = 0; k < order / 2; ++k) {
    const double theta = std::numbers::pi * (2.0 * k + 1.0) / (2.0 * order);
    const double two_zeta = 2.0 * std::sin(theta);
    Matrix a(2, 2), b(2, 1), c(1, 2), d = Matrix::Zero(1, 1);
    a << 0.0, wc, -wc, -two_zeta * wc;
    b << 0.0, wc;
    c << 1.0, 0.0;
    append(StateSpaceModel(a, b, c, d));
  }
  if (order % 2 == 1) {
    append(StateSpaceModel(Matrix::Constant(1, 1, -wc), Matrix::Constant(1, 1, wc),
                           Matrix::Identity(1, 1), Matrix::Zero(1, 1)));
  }
  return chain.with_labels({"in"}, {"out"});
}

}  // namespace cavlock
