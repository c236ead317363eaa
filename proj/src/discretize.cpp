#include "cavlock/discretize.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include <unsupported/Eigen/MatrixFunctions>

#include "cavlock/errors.hpp"

namespace cavlock {

DiscreteStateSpaceModel discretize_zoh(const StateSpaceModel& model, double ts) {
  if (!(ts > 0.0) || !std::isfinite(ts)) throw InputError("sample period must be positive");
  const Index n = model.states(), m = model.inputs();
  if (n == 0)
    return {Matrix(0, 0), Matrix(0, m), Matrix(model.outputs(), 0), model.D(), ts,
            model.input_labels(), model.output_labels()};

  Matrix block = Matrix::Zero(n + m, n + m);
  block.topLeftCorner(n, n) = model.A() * ts;
  block.topRightCorner(n, m) = model.B() * ts;
  const double norm = block.lpNorm<1>();
  const Matrix e = block.exp();
  if (!e.allFinite()) {
    std::ostringstream msg;
    msg << "matrix exponential overflow in ZOH discretization (||[A B; 0 0] Ts||_1 = " << norm
        << ", ||A||_F = " << model.A().norm() << ", Ts = " << ts << ")";
    throw NumericalError(msg.str());
  }
  return {e.topLeftCorner(n, n), e.topRightCorner(n, m), model.C(), model.D(), ts,
          model.input_labels(), model.output_labels()};
}

DiscreteStateSpaceModel discretize_tustin(const StateSpaceModel& model, double ts,
                                          std::optional<double> prewarp_hz) {
  if (!(ts > 0.0) || !std::isfinite(ts)) throw InputError("sample period must be positive");
  double a = 2.0 / ts;
  if (prewarp_hz) {
    const double wp = 2.0 * std::numbers::pi * *prewarp_hz;
    if (!(wp > 0.0) || !(wp * ts < std::numbers::pi))
      throw InputError("prewarp frequency must lie in (0, Nyquist)");
    a = wp / std::tan(wp * ts / 2.0);
  }
  const Index n = model.states();
  if (n == 0)
    return {Matrix(0, 0), Matrix(0, model.inputs()), Matrix(model.outputs(), 0), model.D(), ts,
            model.input_labels(), model.output_labels()};
  const Matrix shifted = a * Matrix::Identity(n, n) - model.A();
  Eigen::FullPivLU<Matrix> lu(shifted);
  if (!lu.isInvertible() || lu.rcond() < 1e-14)
    throw NumericalError("bilinear map matrix (a I - A) is singular");
  const double root = std::sqrt(2.0 * a);
  const Matrix ad = lu.solve(a * Matrix::Identity(n, n) + model.A());
  const Matrix bd = root * lu.solve(model.B());
  const Matrix cd = root * shifted.transpose().fullPivLu().solve(model.C().transpose()).transpose();
  const Matrix dd = model.D() + model.C() * lu.solve(model.B());
  return {ad, bd, cd, dd, ts, model.input_labels(), model.output_labels()};
}

}  // namespace cavlock
