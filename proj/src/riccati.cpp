#include "cavlock/riccati.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "cavlock/errors.hpp"
#include "cavlock/schur.hpp"

namespace cavlock {

namespace {

Matrix symmetrized(const Matrix& m) { return 0.5 * (m + m.transpose()); }

Matrix care_residual(const Matrix& a, const Matrix& g, const Matrix& q, const Matrix& x) {
  return x * a + a.transpose() * x + q - x * g * x;
}

void check_inputs(const Matrix& a, const Matrix& b, const Matrix& q, const Matrix& r) {
  const Index n = a.rows();
  if (a.cols() != n || b.rows() != n || q.rows() != n || q.cols() != n || r.rows() != b.cols() ||
      r.cols() != b.cols())
    throw InputError("Riccati equation: dimension mismatch");
  if (!a.allFinite() || !b.allFinite() || !q.allFinite() || !r.allFinite())
    throw InputError("Riccati equation: non-finite coefficients");
  const double qnorm = q.norm();
  if ((q - q.transpose()).norm() > 1e-10 * std::max(qnorm, 1.0))
    throw InputError("Riccati equation: Q is not symmetric");
  if (n > 0) {
    Eigen::SelfAdjointEigenSolver<Matrix> qe(symmetrized(q), Eigen::EigenvaluesOnly);
    if (qe.eigenvalues().minCoeff() < -1e-10 * std::max(qnorm, 1.0))
      throw InputError("Riccati equation: Q is not positive semidefinite");
  }
  if ((r - r.transpose()).norm() > 1e-12 * std::max(r.norm(), 1.0))
    throw InputError("Riccati equation: R is not symmetric");
  Eigen::SelfAdjointEigenSolver<Matrix> re(symmetrized(r), Eigen::EigenvaluesOnly);
  if (r.rows() > 0 && !(re.eigenvalues().minCoeff() > 0.0))
    throw InputError("Riccati equation: R is not positive definite (indefinite R)");
}

// PBH rank test on the eigenvalues with Re >= -tol.
bool pbh_full_rank(const Matrix& a, const Matrix& b) {
  const Index n = a.rows();
  const double scale = std::max({a.norm(), b.norm(), 1e-300});
  for (const Complex& lambda : poles(a)) {
    if (lambda.real() < -1e-12 * scale) continue;
    CMatrix pencil(n, n + b.cols());
    pencil << a.cast<Complex>() - lambda * CMatrix::Identity(n, n), b.cast<Complex>();
    Eigen::JacobiSVD<CMatrix> svd(pencil);
    if (svd.singularValues()(n - 1) <= 1e-10 * scale) return false;
  }
  return true;
}

// Stable invariant subspace of the Hamiltonian [[A, -G], [-Q, -A^T]].
bool schur_solve(const Matrix& a, const Matrix& g, const Matrix& q, Matrix& x) {
  const Index n = a.rows();
  Matrix h(2 * n, 2 * n);
  h << a, -g, -q, -a.transpose();
  const double tol = 1e-12 * std::max(h.norm(), 1.0);
  OrderedSchur s = ordered_schur(h, [tol](Complex l) { return l.real() < -tol; });
  if (s.selected != n) return false;
  const CMatrix u11 = s.u.topLeftCorner(n, n);
  const CMatrix u21 = s.u.bottomLeftCorner(n, n);
  Eigen::FullPivLU<CMatrix> lu(u11.transpose());
  if (lu.rcond() < 1e-14) return false;
  // X = U21 U11^{-1}  <=>  U11^T X^T = U21^T
  const CMatrix xc = lu.solve(u21.transpose()).transpose();
  x = symmetrized(xc.real());
  return x.allFinite();
}

// Bass: A - B K0 is Hurwitz for K0 = B^T Z^{-1},
// (A + bI) Z + Z (A + bI)^T = 2 B B^T.
Matrix bass_gain(const Matrix& a, const Matrix& b) {
  const double beta = std::max(a.cwiseAbs().rowwise().sum().maxCoeff(), 1.0);
  const Matrix shifted = -(a + beta * Matrix::Identity(a.rows(), a.rows()));
  const Matrix z = solve_lyapunov(shifted, 2.0 * b * b.transpose());
  Eigen::LDLT<Matrix> ldlt(z);
  if (ldlt.info() != Eigen::Success) throw NumericalError("Bass stabilization failed (pair not controllable)");
  return ldlt.solve(b).transpose();
}

// Newton steps in correction form: (A - G X)^T dX + dX (A - G X) = -res(X).
int newton_refine(const Matrix& a, const Matrix& g, const Matrix& q, Matrix& x, int max_steps,
                  int min_steps) {
  double best = care_relative_residual(a, g, q, x);
  int steps = 0;
  for (; steps < max_steps; ++steps) {
    const Matrix ak = a - g * x;
    Matrix dx;
    try {
      dx = solve_lyapunov(ak.transpose(), care_residual(a, g, q, x));
    } catch (const NumericalError&) {
      break;
    }
    const Matrix candidate = symmetrized(x + dx);
    const double res = care_relative_residual(a, g, q, candidate);
    if (!(res < best) && steps >= min_steps) break;
    if (res < best || steps < min_steps) {
      x = candidate;
      best = std::min(best, res);
    }
    if (best < 1e-15) {
      ++steps;
      break;
    }
  }
  return steps;
}

Matrix newton_kleinman(const Matrix& a, const Matrix& b, const Matrix& q, const Matrix& r,
                       int max_steps) {
  Eigen::LLT<Matrix> rl(r);
  Matrix k = bass_gain(a, b);
  Matrix x = Matrix::Zero(a.rows(), a.rows());
  double prev = std::numeric_limits<double>::infinity();
  for (int step = 0; step < max_steps; ++step) {
    const Matrix ak = a - b * k;
    x = symmetrized(solve_lyapunov(ak.transpose(), q + k.transpose() * r * k));
    k = rl.solve(b.transpose() * x);
    const double change = (x.norm() == 0.0) ? 0.0 : std::abs(x.norm() - prev) / x.norm();
    if (change < 1e-14) break;
    prev = x.norm();
  }
  return x;
}

}  // namespace

Matrix solve_lyapunov(const Matrix& a, const Matrix& q) { return lyapunov_solve(a, q); }

double care_relative_residual(const Matrix& a, const Matrix& g, const Matrix& q, const Matrix& x) {
  const double denom = std::max(1.0, x.squaredNorm() * g.norm());
  return care_residual(a, g, q, x).norm() / denom;
}

bool is_stabilizable(const Matrix& a, const Matrix& b) { return pbh_full_rank(a, b); }

bool is_detectable(const Matrix& a, const Matrix& c) {
  return pbh_full_rank(a.transpose(), c.transpose());
}

CareSolution solve_care(const Matrix& a, const Matrix& b, const Matrix& q, const Matrix& r,
                        const CareOptions& options) {
  check_inputs(a, b, q, r);
  const Index n = a.rows();
  CareSolution sol;
  if (n == 0) {
    sol.x = Matrix(0, 0);
    sol.method = "trivial";
    return sol;
  }
  if (!is_stabilizable(a, b)) throw NumericalError("Riccati equation: (A, B) is not stabilizable");

  Eigen::LLT<Matrix> rl(symmetrized(r));
  const Matrix g = symmetrized(b * rl.solve(b.transpose()));
  const Matrix qs = symmetrized(q);

  Matrix x;
  bool ok = false;
  try {
    ok = schur_solve(a, g, qs, x);
  } catch (const NumericalError&) {
    ok = false;
  }
  if (ok) {
    sol.method = "schur";
    ok = spectral_abscissa(a - g * x) < 0.0;
  }
  if (!ok) {
    x = newton_kleinman(a, b, qs, symmetrized(r), options.max_newton_steps);
    sol.method = "newton-kleinman";
  }
  sol.newton_steps = newton_refine(a, g, qs, x, options.max_newton_steps, 1);

  sol.x = symmetrized(x);
  sol.relative_residual = care_relative_residual(a, g, qs, sol.x);
  sol.closed_loop_spectrum = poles(Matrix(a - g * sol.x));
  double abscissa = -std::numeric_limits<double>::infinity();
  for (const Complex& p : sol.closed_loop_spectrum) abscissa = std::max(abscissa, p.real());

  if (!(abscissa < 0.0) || !(sol.relative_residual <= options.tolerance)) {
    std::ostringstream msg;
    msg << "Riccati equation: no acceptable stabilizing solution (method " << sol.method
        << ", relative residual " << sol.relative_residual << ", closed-loop spectral abscissa "
        << abscissa << ", ||X||_F " << sol.x.norm() << ")";
    throw NumericalError(msg.str());
  }
  return sol;
}

CareSolution solve_filter_care(const Matrix& a, const Matrix& c, const Matrix& v1,
                               const Matrix& v2, const CareOptions& options) {
  return solve_care(a.transpose(), c.transpose(), v1, v2, options);
}

}  // namespace cavlock
