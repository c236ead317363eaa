#include "cavlock/lqg.hpp"

#include <cmath>
#include <sstream>

#include "cavlock/errors.hpp"

namespace cavlock {

void DesignParams::validate() const {
  const std::pair<const char*, double> fields[] = {{"eps1", eps1}, {"eps2", eps2},
                                                   {"eps3", eps3}, {"r", r},
                                                   {"q_bar", q_bar}, {"z_weight", z_weight}};
  for (const auto& [name, value] : fields)
    if (!(value > 0.0) || !std::isfinite(value))
      throw InputError(std::string("design parameter ") + name + " must be strictly positive");
}

LqgWeights build_weights(const AugmentedPlant& plant, const DesignParams& dp) {
  dp.validate();
  const Matrix& bt = plant.model.B();
  const Matrix& ct = plant.model.C();
  if (ct.rows() != 2 || bt.cols() != 1)
    throw InputError("integral LQG weights need an augmented plant with 1 input and 2 outputs");
  LqgWeights w;
  Matrix output_weight = Matrix::Zero(2, 2);
  output_weight(0, 0) = dp.z_weight;
  output_weight(1, 1) = dp.q_bar;
  w.q = ct.transpose() * output_weight * ct;
  w.r = Matrix::Constant(1, 1, dp.r);
  w.v1 = dp.eps1 * dp.eps1 * bt * bt.transpose();
  w.v2 = Matrix::Zero(2, 2);
  w.v2(0, 0) = dp.eps2 * dp.eps2;
  w.v2(1, 1) = dp.eps3 * dp.eps3;
  return w;
}

Matrix lqr_gain(const CareSolution& care, const Matrix& b, const Matrix& r) {
  return -r.llt().solve(b.transpose() * care.x);
}

Matrix kalman_gain(const CareSolution& care, const Matrix& c, const Matrix& v2) {
  Eigen::LLT<Matrix> llt(v2);
  if (llt.info() != Eigen::Success) throw InputError("measurement covariance V2 is singular");
  // K = P C^T V2^{-1}  <=>  V2 K^T = C P
  return llt.solve(c * care.x).transpose();
}

StateSpaceModel lqg_controller_model(const Matrix& a, const Matrix& b, const Matrix& c,
                                     const Matrix& f, const Matrix& k) {
  const Matrix ac = a - k * c + b * f;
  return {ac, k, f, Matrix::Zero(f.rows(), k.cols()), {"y1", "y2"}, {"u"}};
}

StateSpaceModel design_closed_loop(const StateSpaceModel& augmented_plant,
                                   const StateSpaceModel& controller) {
  return closed_loop(augmented_plant, controller, +1);
}

ControllerRealization design_integral_lqg(const StateSpaceModel& plant, const DesignParams& dp,
                                          Index z_output, const CareOptions& options) {
  dp.validate();
  AugmentedPlant aug = augment_integrator(plant, z_output);
  if (aug.model.D().cwiseAbs().maxCoeff() != 0.0)
    throw InputError("integral LQG design expects a strictly proper plant (D = 0)");
  const Matrix& a = aug.model.A();
  const Matrix& b = aug.model.B();
  const Matrix& c = aug.model.C();

  LqgWeights w = build_weights(aug, dp);
  CareSolution regulator = solve_care(a, b, w.q, w.r, options);
  CareSolution estimator = solve_filter_care(a, c, w.v1, w.v2, options);
  const Matrix f = lqr_gain(regulator, b, w.r);
  const Matrix k = kalman_gain(estimator, c, w.v2);

  StateSpaceModel model = lqg_controller_model(a, b, c, f, k);
  const StateSpaceModel loop = design_closed_loop(aug.model, model);
  std::vector<Complex> spectrum = poles(loop);
  double abscissa = spectral_abscissa(loop.A());
  if (!(abscissa < 0.0)) {
    std::ostringstream msg;
    msg << "integral LQG design loop is unstable (spectral abscissa " << abscissa << ")";
    throw VerificationError(msg.str());
  }
  return {std::move(model), f,          k, std::move(aug), std::move(w), std::move(regulator),
          std::move(estimator), std::move(spectrum)};
}

StateSpaceModel loop_controller(const StateSpaceModel& controller) {
  if (controller.inputs() != 2 || controller.outputs() != 1)
    throw InputError("loop_controller expects a controller with inputs [y1, y2] and output u");
  Matrix a = Matrix::Zero(1, 1), b = Matrix::Ones(1, 1);
  Matrix c(2, 1), d(2, 1);
  c << 0.0, 1.0;
  d << 1.0, 0.0;
  const StateSpaceModel front_end(a, b, c, d, {"y1"}, {"y1", "y2"});
  return negate(series(front_end, controller)).with_labels({"y1"}, {"u"});
}

}  // namespace cavlock
