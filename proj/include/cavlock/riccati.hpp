#pragma once

#include <string>
#include <vector>

#include "cavlock/linsys.hpp"

namespace cavlock {

struct CareOptions {
  /// Acceptance threshold on the relative residual.
  double tolerance = 1e-9;
  int max_newton_steps = 50;
};

/// Stabilizing solution of  X A + A^T X + Q - X B R^{-1} B^T X = 0.
struct CareSolution {
  Matrix x;
  /// ||res||_F / max(1, ||X||_F^2 ||B R^{-1} B^T||_F)
  double relative_residual = 0.0;
  /// Eigenvalues of A - B R^{-1} B^T X.
  std::vector<Complex> closed_loop_spectrum;
  std::string method;
  int newton_steps = 0;
};

/// Solves A P + P A^T + Q = 0. Throws NumericalError ("singular Lyapunov
/// operator") when A and -A share an eigenvalue.
Matrix solve_lyapunov(const Matrix& a, const Matrix& q);

/// Ordered-Schur solve of the Hamiltonian followed by Newton refinement;
/// falls back to Newton-Kleinman from a Bass stabilizing gain.
CareSolution solve_care(const Matrix& a, const Matrix& b, const Matrix& q, const Matrix& r,
                        const CareOptions& options = {});

/// Filter (Kalman) Riccati equation  A P + P A^T + V1 - P C^T V2^{-1} C P = 0,
/// solved through transpose duality.
CareSolution solve_filter_care(const Matrix& a, const Matrix& c, const Matrix& v1,
                               const Matrix& v2, const CareOptions& options = {});

double care_relative_residual(const Matrix& a, const Matrix& g, const Matrix& q, const Matrix& x);

/// PBH test: rank [A - lambda I, B] = n for every eigenvalue with Re >= 0.
bool is_stabilizable(const Matrix& a, const Matrix& b);
bool is_detectable(const Matrix& a, const Matrix& c);

}  // namespace cavlock
