#pragma once

#include <vector>

#include "cavlock/cavity.hpp"
#include "cavlock/linsys.hpp"
#include "cavlock/riccati.hpp"

namespace cavlock {

/// Noise intensities and cost weights of the integral LQG design.
struct DesignParams {
  double eps1 = 5e-2;   ///< process (actuator) noise stddev
  double eps2 = 500.0;  ///< measurement noise stddev on y
  double eps3 = 3e-4;   ///< noise stddev on the integral channel
  double r = 1e3;       ///< control weight
  double q_bar = 1e6;   ///< integral-output weight
  double z_weight = 1.0;

  void validate() const;
};

struct LqgWeights {
  Matrix q;   ///< C~^T diag(z_weight, q_bar) C~
  Matrix r;   ///< 1x1
  Matrix v1;  ///< eps1^2 B~ B~^T
  Matrix v2;  ///< diag(eps2^2, eps3^2)
};

LqgWeights build_weights(const AugmentedPlant& plant, const DesignParams& dp);

/// F = -R^{-1} B^T X
Matrix lqr_gain(const CareSolution& care, const Matrix& b, const Matrix& r);
/// K = P C^T V2^{-1}
Matrix kalman_gain(const CareSolution& care, const Matrix& c, const Matrix& v2);

/// Estimator-based controller  xh' = (A - K C + B F) xh + K y~,  u = F xh.
/// The realization maps y~ = [y1; y2] to u with positive sign (u = C(s) y~).
StateSpaceModel lqg_controller_model(const Matrix& a, const Matrix& b, const Matrix& c,
                                     const Matrix& f, const Matrix& k);

struct ControllerRealization {
  StateSpaceModel model;  ///< inputs [y1, y2], output u
  Matrix f;               ///< 1 x (n+1)
  Matrix k;               ///< (n+1) x 2
  AugmentedPlant plant;
  LqgWeights weights;
  CareSolution regulator;
  CareSolution estimator;
  /// Eigenvalues of the design loop (augmented plant with this controller).
  std::vector<Complex> closed_loop_spectrum;
};

/// Augment -> weights -> both Riccati solves -> gains -> controller. Throws
/// VerificationError when the resulting design loop is unstable.
ControllerRealization design_integral_lqg(const StateSpaceModel& plant, const DesignParams& dp,
                                          Index z_output = 0, const CareOptions& options = {});

/// Design loop: augmented plant in positive feedback with the controller.
StateSpaceModel design_closed_loop(const StateSpaceModel& augmented_plant,
                                   const StateSpaceModel& controller);

/// SISO negative-feedback form of a two-input integral controller: the
/// integral input y2 is synthesized from y1 by an integrator front end, so
/// u = -K(s) y1 with K = -(C1 + C2 / s).
StateSpaceModel loop_controller(const StateSpaceModel& controller);

}  // namespace cavlock
