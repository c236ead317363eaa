#include "cavlock/sysid.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "cavlock/errors.hpp"

namespace cavlock {

namespace {

struct DiscreteFit {
  Matrix a, b, c, d;
  std::vector<double> singular_values;
  double trailing_ratio = 0.0;
  std::vector<std::string> warnings;
};

// Identifies G(x) = D + C (x I - A)^{-1} B from samples G_k at points x_k,
// where x_k lies on the unit circle (bilinear case) or on the scaled
// imaginary axis.
DiscreteFit subspace_fit(const std::vector<Complex>& points, const std::vector<CMatrix>& samples,
                         const std::vector<double>& weights, Index n, Index q, double rank_tol,
                         bool strictly_proper, bool bilinear) {
  const Index count = static_cast<Index>(points.size());
  const Index p = samples.front().rows(), m = samples.front().cols();

  // Complex block data matrices: row block i, column block k holds w_k x_k^i G_k
  // and w_k x_k^i I_m.
  CMatrix gc(q * p, count * m), wc(q * m, count * m);
  for (Index k = 0; k < count; ++k) {
    Complex power = weights[static_cast<std::size_t>(k)];
    for (Index i = 0; i < q; ++i) {
      gc.block(i * p, k * m, p, m) = power * samples[static_cast<std::size_t>(k)];
      wc.block(i * m, k * m, m, m) = power * CMatrix::Identity(m, m);
      power *= points[static_cast<std::size_t>(k)];
    }
  }
  // Real-valued problem: [Re, Im] column stacking enforces conjugate symmetry.
  Matrix stacked(q * (m + p), 2 * count * m);
  stacked << wc.real(), wc.imag(), gc.real(), gc.imag();

  // LQ factorization via QR of the transpose; L22 spans the part of G
  // orthogonal to the row space of W.
  Eigen::HouseholderQR<Matrix> qr(stacked.transpose());
  const Index rows = q * (m + p);
  const Matrix r = qr.matrixQR().topRows(rows).triangularView<Eigen::Upper>();
  const Matrix l22 = r.transpose().block(q * m, q * m, q * p, q * p);

  Eigen::JacobiSVD<Matrix> svd(l22, Eigen::ComputeFullU);
  DiscreteFit fit;
  const Vector sv = svd.singularValues();
  fit.singular_values.assign(sv.data(), sv.data() + sv.size());
  const double data_norm = stacked.bottomRows(q * p).norm();
  fit.trailing_ratio = data_norm > 0.0 ? sv(n - 1) / data_norm : 0.0;
  if (fit.trailing_ratio < rank_tol) {
    std::ostringstream msg;
    msg << "singular value gap below rank_tol at requested order " << n << " (sigma_n ratio "
        << fit.trailing_ratio << ")";
    fit.warnings.push_back(msg.str());
  }

  const Matrix us = svd.matrixU().leftCols(n);
  fit.c = us.topRows(p);
  // Shift invariance: U(1:q-1) A = U(2:q)
  const Matrix upper = us.topRows((q - 1) * p);
  const Matrix lower = us.bottomRows((q - 1) * p);
  fit.a = upper.completeOrthogonalDecomposition().solve(lower);

  // B, D by linear least squares against the weighted samples, one input
  // column at a time.
  fit.b = Matrix::Zero(n, m);
  fit.d = Matrix::Zero(p, m);
  const CMatrix ac = fit.a.cast<Complex>();
  const CMatrix cc = fit.c.cast<Complex>();
  std::vector<CMatrix> phi(static_cast<std::size_t>(count));
  for (Index k = 0; k < count; ++k) {
    CMatrix resolvent = -ac;
    resolvent.diagonal().array() += points[static_cast<std::size_t>(k)];
    phi[static_cast<std::size_t>(k)] =
        resolvent.transpose().partialPivLu().solve(cc.transpose()).transpose();
  }
  // A strictly proper continuous model has D = 0, which is G(-1) = 0 after the
  // bilinear map: D = C (A + I)^{-1} B. Either way D = offset * B.
  const Index unknowns = strictly_proper ? n : n + p;
  CMatrix offset = CMatrix::Zero(p, n);
  if (strictly_proper && bilinear) {
    const Matrix shifted = fit.a + Matrix::Identity(n, n);
    offset = shifted.transpose().fullPivLu().solve(fit.c.transpose()).transpose().cast<Complex>();
  }
  for (Index j = 0; j < m; ++j) {
    Matrix lhs(2 * count * p, unknowns);
    Vector rhs(2 * count * p);
    for (Index k = 0; k < count; ++k) {
      const double w = weights[static_cast<std::size_t>(k)];
      CMatrix row(p, unknowns);
      if (strictly_proper)
        row = phi[static_cast<std::size_t>(k)] + offset;
      else
        row << phi[static_cast<std::size_t>(k)], CMatrix::Identity(p, p);
      row *= w;
      const CVector g = w * samples[static_cast<std::size_t>(k)].col(j);
      lhs.middleRows(2 * k * p, p) = row.real();
      lhs.middleRows(2 * k * p + p, p) = row.imag();
      rhs.segment(2 * k * p, p) = g.real();
      rhs.segment(2 * k * p + p, p) = g.imag();
    }
    Eigen::ColPivHouseholderQR<Matrix> ls(lhs);
    ls.setThreshold(1e-13);
    if (ls.rank() < unknowns) {
      std::ostringstream msg;
      msg << "least-squares problem for B, D is rank deficient (rank " << ls.rank() << " of "
          << unknowns << ")";
      fit.warnings.push_back(msg.str());
    }
    const Vector sol = ls.solve(rhs);
    fit.b.col(j) = sol.head(n);
    fit.d.col(j) = strictly_proper ? Vector(offset.real() * sol.head(n)) : Vector(sol.tail(p));
  }
  return fit;
}

}  // namespace

void SysIdConfig::validate() const {
  if (model_order < 1) throw InputError("model order must be >= 1");
  if (effective_block_rows() <= model_order)
    throw InputError("block rows must exceed the model order");
  if (!(rank_tol > 0.0 && rank_tol < 1.0)) throw InputError("rank_tol must lie in (0, 1)");
  if (bilinear_scale < 0.0) throw InputError("bilinear scale must be non-negative");
  for (double w : weights)
    if (!(w > 0.0) || !std::isfinite(w)) throw InputError("sample weights must be positive");
}

IdentificationResult identify(const FrequencyResponseData& data, const SysIdConfig& cfg) {
  cfg.validate();
  const Index n = cfg.model_order, q = cfg.effective_block_rows();
  const std::size_t count = data.size();
  if (count < static_cast<std::size_t>(2 * q))
    throw InputError("insufficient samples: " + std::to_string(count) + " frequencies for " +
                     std::to_string(q) + " block rows (need at least " +
                     std::to_string(2 * q) + ")");
  if (!cfg.weights.empty() && cfg.weights.size() != count)
    throw InputError("weight vector length does not match the sample count");

  std::vector<double> weights(count, 1.0);
  for (std::size_t k = 0; k < count; ++k) {
    if (!cfg.weights.empty()) weights[k] = cfg.weights[k];
    if (cfg.weighting == SampleWeighting::kRelative) {
      const double mag = data.response()[k].norm();
      if (!(mag > 0.0)) throw InputError("relative weighting needs nonzero samples");
      weights[k] /= mag;
    }
  }

  const double w_lo = 2.0 * std::numbers::pi * data.freqs_hz().front();
  const double w_hi = 2.0 * std::numbers::pi * data.freqs_hz().back();
  const double scale = cfg.bilinear_scale > 0.0 ? cfg.bilinear_scale : std::sqrt(w_lo * w_hi);

  std::vector<Complex> points(count);
  for (std::size_t k = 0; k < count; ++k) {
    const double w = 2.0 * std::numbers::pi * data.freqs_hz()[k];
    points[k] = cfg.use_bilinear_map ? Complex(scale, w) / Complex(scale, -w)
                                     : Complex(0.0, w / w_hi);
  }

  DiscreteFit fit = subspace_fit(points, data.response(), weights, n, q, cfg.rank_tol,
                                 cfg.strictly_proper, cfg.use_bilinear_map);

  Matrix a, b, c, d;
  if (cfg.use_bilinear_map) {
    // s = scale (z - 1) / (z + 1)
    const Matrix m = fit.a + Matrix::Identity(n, n);
    Eigen::FullPivLU<Matrix> lu(m);
    if (!lu.isInvertible() || lu.rcond() < 1e-14)
      throw NumericalError("identified model has a pole at z = -1 (infinite frequency)");
    const double root = std::sqrt(2.0 * scale);
    a = scale * lu.solve(fit.a - Matrix::Identity(n, n));
    b = root * lu.solve(fit.b);
    // C M^{-1} = (M^{-T} C^T)^T
    c = root * m.transpose().fullPivLu().solve(fit.c.transpose()).transpose();
    d = cfg.strictly_proper ? Matrix(Matrix::Zero(fit.d.rows(), fit.d.cols()))
                            : Matrix(fit.d - fit.c * lu.solve(fit.b));
  } else {
    a = w_hi * fit.a;
    b = w_hi * fit.b;
    c = fit.c;
    d = fit.d;
  }

  if (!a.allFinite() || !b.allFinite() || !c.allFinite() || !d.allFinite())
    throw NumericalError("identification produced non-finite matrices");

  StateSpaceModel model = diagonal_scaling(StateSpaceModel(a, b, c, d));
  if (!cfg.allow_unstable && !is_stable(model)) {
    std::ostringstream msg;
    msg << "identified model is unstable (spectral abscissa " << spectral_abscissa(a)
        << "); set allow_unstable to accept it";
    throw NumericalError(msg.str());
  }

  FitReport report = fit_error(model, data);
  report.singular_values = std::move(fit.singular_values);
  report.trailing_sv_ratio = fit.trailing_ratio;
  report.warnings = std::move(fit.warnings);
  return {std::move(model), std::move(report)};
}

FitReport fit_error(const StateSpaceModel& model, const FrequencyResponseData& data) {
  if (model.outputs() != data.outputs() || model.inputs() != data.inputs())
    throw InputError("model and data dimensions differ");
  double err2 = 0.0, ref2 = 0.0, worst_db = 0.0;
  for (std::size_t k = 0; k < data.size(); ++k) {
    const CMatrix hm = eval_response(model, 2.0 * std::numbers::pi * data.freqs_hz()[k]);
    const CMatrix& hd = data.response()[k];
    err2 += (hm - hd).squaredNorm();
    ref2 += hd.squaredNorm();
    for (Index i = 0; i < hd.rows(); ++i)
      for (Index j = 0; j < hd.cols(); ++j) {
        const double db = 20.0 * std::log10(std::abs(hm(i, j))) -
                          20.0 * std::log10(std::abs(hd(i, j)));
        worst_db = std::max(worst_db, std::isnan(db) ? 0.0 : std::abs(db));
      }
  }
  FitReport report;
  report.relative_rms_error = ref2 > 0.0 ? std::sqrt(err2 / ref2) : std::sqrt(err2);
  report.max_abs_error_db = worst_db;
  return report;
}

}  // namespace cavlock
