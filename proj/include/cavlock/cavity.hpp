#pragma once

#include "cavlock/linsys.hpp"

namespace cavlock {

/// Linearization point and couplings of the optical cavity.
struct CavityParams {
  double kappa0 = 0.0;  ///< input-mirror coupling rate (rad/s)
  double kappa1 = 0.0;  ///< output-mirror coupling rate (rad/s)
  double kappaL = 0.0;  ///< loss coupling rate (rad/s)
  double alpha = 1.0;   ///< steady-state intracavity amplitude
  double phi = 0.0;     ///< homodyne local-oscillator phase (rad)
  double k2 = 1.0;      ///< homodyne transimpedance gain
  double beta = 1.0;    ///< coherent drive amplitude

  double kappa() const { return kappa0 + kappa1 + kappaL; }
  void validate() const;

  /// kappa/2 = 2*pi*1e5 rad/s split 50/30/20 over the three ports, phi = pi/2.
  static CavityParams demo();
};

struct DetuningParams {
  long q = 1;
  double n_index = 1.0;
  double length_m = 1.0;
  double omega_laser = 0.0;  ///< rad/s
  double c = 299792458.0;

  void validate() const;
};

/// Cavity resonance minus laser frequency, rad/s.
double detuning(const DetuningParams& p);

/// Two-state quadrature model with inputs
///   [delta, q0, p0, q1, p1, qL, pL, w2]
/// and outputs [z, y] where z is the noiseless homodyne signal and
/// y = z + k2 q0 + w2.
StateSpaceModel build_cavity_model(const CavityParams& p);

/// Closed-form DC gain from detuning to z.
double cavity_dc_gain(const CavityParams& p);

/// Plant augmented with the integral of its regulated output.
struct AugmentedPlant {
  StateSpaceModel model;  ///< state [x; int z], input u, outputs [y1; y2]
  Index plant_states = 0;
};

/// Builds A~ = [[A, 0], [C_z, 0]], B~ = [B; 0], C~ = [[C_z, 0], [0, 1]] for a
/// single-input plant. `z_output` selects the row of C used as the regulated
/// (and measured) output.
AugmentedPlant augment_integrator(const StateSpaceModel& plant, Index z_output = 0);

/// Butterworth low-pass of the given order with -3 dB point at corner_hz,
/// realized as a cascade of second-order (plus one first-order) sections.
StateSpaceModel antialias_filter(int order = 8, double corner_hz = 2500.0);

}  // namespace cavlock
