#pragma once

#include <string>
#include <vector>

#include "cavlock/linsys.hpp"
#include "cavlock/lqg.hpp"

namespace cavlock {

struct Gramians {
  Matrix wc;  ///< A Wc + Wc A^T + B B^T = 0
  Matrix wo;  ///< A^T Wo + Wo A + C^T C = 0
};

Gramians gramians(const StateSpaceModel& model);

struct BalancedRealization {
  StateSpaceModel model;
  /// Nonincreasing; one entry per state of the input model.
  std::vector<double> hankel_sv;
  /// Number of states kept (Hankel singular values above the rank tolerance).
  Index effective_order = 0;
  std::vector<std::string> warnings;
};

/// Square-root balancing. States whose Hankel singular value falls below
/// rank_tol * sigma_1 are dropped with a warning.
BalancedRealization balance(const StateSpaceModel& model, double rank_tol = 1e-10);

/// Unweighted balanced truncation to `order` states.
StateSpaceModel balanced_truncation(const StateSpaceModel& model, Index order);

/// H-infinity norm via Hamiltonian eigenvalue iteration started from a dense
/// grid. Throws NumericalError for unstable models.
double hinf_norm(const StateSpaceModel& model, double rel_tol = 1e-4);

/// Closed-loop weight W = P Cn (I + P Cn)^{-1}, Cn the negative-feedback form
/// of `controller` under `sign` (u = sign * -Cn y, so sign = +1 means u = C y).
StateSpaceModel reduction_weight(const StateSpaceModel& plant, const StateSpaceModel& controller,
                                 int sign);

struct WeightedReduction {
  StateSpaceModel reduced;
  /// Weighted Hankel singular values of the stable part of the controller.
  std::vector<double> weighted_hsv;
  /// States on or right of the imaginary axis, kept without reduction.
  Index unstable_states = 0;
  std::vector<std::string> warnings;
};

/// Frequency-weighted balanced truncation (Enns) of `controller` to
/// target_order states with the closed-loop weight W applied at the
/// controller input, so that ||(C - C_r) W||_inf is kept small.
WeightedReduction weighted_reduce(const StateSpaceModel& controller, const StateSpaceModel& plant,
                                  Index target_order, int sign = -1);
WeightedReduction weighted_reduce(const ControllerRealization& controller, Index target_order);

struct ReductionCheck {
  bool stable = false;
  /// ||(C - C_r) W||_inf (infinite when the error system is unstable).
  double weighted_error = 0.0;
  double closed_loop_abscissa = 0.0;
};

ReductionCheck verify_reduced(const StateSpaceModel& plant, const StateSpaceModel& full_controller,
                              const StateSpaceModel& reduced_controller, int sign = -1);

/// Splits G into a part with Re(lambda) < -tol * scale and the rest,
/// G = stable + unstable (D kept in the stable part).
struct StableSplit {
  StateSpaceModel stable;
  StateSpaceModel unstable;
};
StableSplit split_stable(const StateSpaceModel& model, double tol = 1e-9);

}  // namespace cavlock
