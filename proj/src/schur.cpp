#include "cavlock/schur.hpp"

#include <cmath>
#include <limits>

#include "cavlock/errors.hpp"

namespace cavlock {

namespace {

// Exchanges the adjacent diagonal entries k and k+1 of the triangular factor.
void swap_adjacent(CMatrix& t, CMatrix& u, Index k) {
  const Complex a = t(k, k), b = t(k + 1, k + 1);
  Complex v1 = t(k, k + 1), v2 = b - a;
  const double norm = std::hypot(std::abs(v1), std::abs(v2));
  if (norm == 0.0) return;  // equal eigenvalues, nothing to exchange
  v1 /= norm;
  v2 /= norm;
  Eigen::Matrix2cd q;
  q << v1, -std::conj(v2), v2, std::conj(v1);
  const Index n = t.rows();
  t.middleRows(k, 2) = q.adjoint() * t.middleRows(k, 2);
  t.middleCols(k, 2) = t.middleCols(k, 2) * q;
  u.middleCols(k, 2) = u.middleCols(k, 2) * q;
  t(k + 1, k) = 0.0;
  t(k, k) = b;
  t(k + 1, k + 1) = a;
  (void)n;
}

}  // namespace

OrderedSchur ordered_schur(const Matrix& a, const std::function<bool(Complex)>& select) {
  OrderedSchur out;
  const Index n = a.rows();
  if (n == 0) {
    out.t = CMatrix(0, 0);
    out.u = CMatrix(0, 0);
    return out;
  }
  Eigen::ComplexSchur<CMatrix> schur(a.cast<Complex>());
  if (schur.info() != Eigen::Success) throw NumericalError("complex Schur decomposition did not converge");
  out.t = schur.matrixT();
  out.u = schur.matrixU();
  // Strictly lower part is zero up to rounding; make it exact.
  out.t.triangularView<Eigen::StrictlyLower>().setZero();

  Index next = 0;
  for (Index j = 0; j < n; ++j) {
    if (!select(out.t(j, j))) continue;
    for (Index k = j - 1; k >= next; --k) swap_adjacent(out.t, out.u, k);
    ++next;
  }
  out.selected = next;
  return out;
}

Matrix invariant_subspace_basis(const Matrix& a, const std::function<bool(Complex)>& select) {
  const OrderedSchur s = ordered_schur(a, select);
  const Index n = a.rows(), k = s.selected;
  if (k == 0) return Matrix(n, 0);
  Matrix stacked(n, 2 * k);
  stacked << s.u.leftCols(k).real(), s.u.leftCols(k).imag();
  Eigen::JacobiSVD<Matrix> svd(stacked, Eigen::ComputeThinU);
  return svd.matrixU().leftCols(k);
}

Matrix lyapunov_solve(const Matrix& a, const Matrix& q) {
  const Index n = a.rows();
  if (a.cols() != n || q.rows() != n || q.cols() != n)
    throw InputError("Lyapunov equation: dimension mismatch");
  if (n == 0) return Matrix(0, 0);
  Eigen::ComplexSchur<CMatrix> schur(a.cast<Complex>());
  if (schur.info() != Eigen::Success) throw NumericalError("complex Schur decomposition did not converge");
  CMatrix t = schur.matrixT();
  t.triangularView<Eigen::StrictlyLower>().setZero();
  const CMatrix& u = schur.matrixU();
  const CMatrix c = u.adjoint() * q.cast<Complex>() * u;

  const double scale = std::max(t.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
  // T Y + Y T^H = -C, solved column by column from the right.
  CMatrix y = CMatrix::Zero(n, n);
  for (Index j = n - 1; j >= 0; --j) {
    CVector rhs = -c.col(j);
    for (Index k = j + 1; k < n; ++k) rhs -= std::conj(t(j, k)) * y.col(k);
    CMatrix shifted = t;
    shifted.diagonal().array() += std::conj(t(j, j));
    for (Index i = 0; i < n; ++i)
      if (std::abs(shifted(i, i)) <= 1e3 * std::numeric_limits<double>::epsilon() * scale)
        throw NumericalError("singular Lyapunov operator: A and -A^T share an eigenvalue");
    y.col(j) = shifted.triangularView<Eigen::Upper>().solve(rhs);
  }
  Matrix x = (u * y * u.adjoint()).real();
  return 0.5 * (x + x.transpose());
}

Matrix psd_factor(const Matrix& p, Index* clipped, double* most_negative) {
  const Matrix sym = 0.5 * (p + p.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym);
  if (es.info() != Eigen::Success) throw NumericalError("symmetric eigensolver did not converge");
  Vector lambda = es.eigenvalues();
  Index count = 0;
  double worst = 0.0;
  for (Index i = 0; i < lambda.size(); ++i) {
    if (lambda(i) < 0.0) {
      ++count;
      worst = std::min(worst, lambda(i));
      lambda(i) = 0.0;
    }
  }
  if (clipped) *clipped = count;
  if (most_negative) *most_negative = worst;
  return es.eigenvectors() * lambda.cwiseSqrt().asDiagonal();
}

}  // namespace cavlock
