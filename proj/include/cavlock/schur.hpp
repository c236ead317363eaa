#pragma once

#include <functional>

#include "cavlock/linsys.hpp"

namespace cavlock {

/// A = U T U^H with T upper triangular and the `selected` eigenvalues of the
/// predicate occupying the leading block of T.
struct OrderedSchur {
  CMatrix t;
  CMatrix u;
  Index selected = 0;
};

OrderedSchur ordered_schur(const Matrix& a, const std::function<bool(Complex)>& select);

/// Real orthonormal basis of the invariant subspace belonging to the selected
/// eigenvalues. The selection must be closed under conjugation.
Matrix invariant_subspace_basis(const Matrix& a, const std::function<bool(Complex)>& select);

/// Solves A X + X A^T + Q = 0 (Bartels-Stewart on the complex Schur form).
/// Throws NumericalError when A and -A^T share an eigenvalue.
Matrix lyapunov_solve(const Matrix& a, const Matrix& q);

/// Symmetric factor L with P ~= L L^T; negative eigenvalues are clipped to 0.
/// Returns the number of clipped eigenvalues through `clipped` when given.
Matrix psd_factor(const Matrix& p, Index* clipped = nullptr, double* most_negative = nullptr);

}  // namespace cavlock
