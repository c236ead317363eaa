#include "cavlock/reduction.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "cavlock/errors.hpp"
#include "cavlock/schur.hpp"

namespace cavlock {

namespace {

void require_stable(const StateSpaceModel& model, const char* what) {
  if (!is_stable(model)) {
    std::ostringstream msg;
    msg << what << ": model is not stable (spectral abscissa " << spectral_abscissa(model.A())
        << ")";
    throw NumericalError(msg.str());
  }
}

// Projection onto the leading k directions of the square-root method.
StateSpaceModel project(const StateSpaceModel& model, const Matrix& lc, const Matrix& lo, Index k,
                        std::vector<double>* sv_out) {
  Eigen::JacobiSVD<Matrix> svd(lo.transpose() * lc, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector sv = svd.singularValues();
  if (sv_out) sv_out->assign(sv.data(), sv.data() + sv.size());
  if (k == 0) return StateSpaceModel::static_gain(model.D(), model.input_labels(), model.output_labels());
  if (!(sv(k - 1) > 1e-14 * std::max(sv(0), std::numeric_limits<double>::min())))
    throw NumericalError("requested order " + std::to_string(k) +
                         " exceeds the numerical rank of the gramian product");
  const Vector inv_root = sv.head(k).cwiseSqrt().cwiseInverse();
  const Matrix left = inv_root.asDiagonal() * svd.matrixU().leftCols(k).transpose() * lo.transpose();
  const Matrix right = lc * svd.matrixV().leftCols(k) * inv_root.asDiagonal();
  return {left * model.A() * right, left * model.B(), model.C() * right, model.D(),
          model.input_labels(), model.output_labels()};
}

std::vector<double> candidate_frequencies(const StateSpaceModel& model) {
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  std::vector<double> peaks;
  for (const Complex& p : poles(model)) {
    const double mag = std::abs(p);
    if (mag > 0.0) {
      lo = std::min(lo, mag);
      hi = std::max(hi, mag);
    }
    if (std::abs(p.imag()) > 0.0) peaks.push_back(std::abs(p.imag()));
  }
  if (!(hi > 0.0)) {
    lo = 1.0;
    hi = 1.0;
  }
  std::vector<double> grid = log_space(0.1 * lo, 10.0 * hi, 400);
  if (hi / lo < 10.0) {
    const auto wide = log_space(lo / 31.6, hi * 31.6, 400);
    grid.insert(grid.end(), wide.begin(), wide.end());
  }
  grid.insert(grid.end(), peaks.begin(), peaks.end());
  grid.push_back(0.0);
  return grid;
}

// Imaginary-axis eigenvalues of the gamma-Hamiltonian, as frequencies >= 0.
std::vector<double> hamiltonian_crossings(const StateSpaceModel& g, double gamma) {
  const Index n = g.states(), m = g.inputs(), p = g.outputs();
  const Matrix &a = g.A(), &b = g.B(), &c = g.C(), &d = g.D();
  const Matrix r = d.transpose() * d - gamma * gamma * Matrix::Identity(m, m);
  const Matrix s = d * d.transpose() - gamma * gamma * Matrix::Identity(p, p);
  const Matrix ri = r.inverse(), si = s.inverse();
  Matrix h(2 * n, 2 * n);
  h << a - b * ri * d.transpose() * c, -gamma * b * ri * b.transpose(),
      gamma * c.transpose() * si * c, -a.transpose() + c.transpose() * d * ri * b.transpose();
  const double scale = std::max(h.norm(), 1.0);
  std::vector<double> out;
  for (const Complex& l : poles(h))
    if (std::abs(l.real()) < 1e-7 * scale && l.imag() >= 0.0) out.push_back(l.imag());
  std::sort(out.begin(), out.end());
  return out;
}

double sigma_at(const StateSpaceModel& g, double w) { return sigma_max(eval_response(g, w)); }

}  // namespace

Gramians gramians(const StateSpaceModel& model) {
  require_stable(model, "gramians");
  Gramians g;
  g.wc = solve_lyapunov(model.A(), model.B() * model.B().transpose());
  g.wo = solve_lyapunov(model.A().transpose(), model.C().transpose() * model.C());
  return g;
}

BalancedRealization balance(const StateSpaceModel& model, double rank_tol) {
  const Gramians g = gramians(model);
  const Matrix lc = psd_factor(g.wc), lo = psd_factor(g.wo);
  Eigen::JacobiSVD<Matrix> svd(lo.transpose() * lc);
  const Vector sv = svd.singularValues();
  Index keep = 0;
  for (Index i = 0; i < sv.size(); ++i)
    if (sv(i) > rank_tol * sv(0)) ++keep;
  BalancedRealization out{project(model, lc, lo, keep, nullptr), {}, keep, {}};
  out.hankel_sv.assign(sv.data(), sv.data() + sv.size());
  if (keep < model.states()) {
    std::ostringstream msg;
    msg << "model is not minimal to tolerance " << rank_tol << ": effective order " << keep
        << " of " << model.states();
    out.warnings.push_back(msg.str());
  }
  return out;
}

StateSpaceModel balanced_truncation(const StateSpaceModel& model, Index order) {
  if (order < 0 || order > model.states()) throw InputError("balanced truncation: invalid order");
  const Gramians g = gramians(model);
  return project(model, psd_factor(g.wc), psd_factor(g.wo), order, nullptr);
}

double hinf_norm(const StateSpaceModel& model, double rel_tol) {
  if (model.states() == 0) return sigma_max(model.D().cast<Complex>());
  require_stable(model, "hinf_norm (infinite norm)");
  const double eps = rel_tol / 4.0;

  double lower = sigma_max(model.D().cast<Complex>());
  double at = std::numeric_limits<double>::infinity();
  for (double w : candidate_frequencies(model)) {
    const double s = sigma_at(model, w);
    if (s > lower) {
      lower = s;
      at = w;
    }
  }
  (void)at;
  if (lower == 0.0) return 0.0;

  for (int iter = 0; iter < 100; ++iter) {
    const double gamma = (1.0 + 2.0 * eps) * lower;
    const std::vector<double> w = hamiltonian_crossings(model, gamma);
    if (w.empty()) return gamma;
    double best = lower;
    std::vector<double> probes;
    if (w.size() == 1) probes.push_back(w.front());
    for (std::size_t i = 0; i + 1 < w.size(); ++i) probes.push_back(0.5 * (w[i] + w[i + 1]));
    for (double x : w) probes.push_back(x);
    for (double x : probes) best = std::max(best, sigma_at(model, x));
    if (!(best > lower * (1.0 + 1e-12))) return gamma;  // spurious crossings only
    lower = best;
  }
  return (1.0 + 2.0 * eps) * lower;
}

StableSplit split_stable(const StateSpaceModel& model, double tol) {
  const Index n = model.states();
  const double scale = std::max(model.A().norm(), 1.0);
  const double cut = -tol * scale;
  Index unstable = 0;
  for (const Complex& p : poles(model))
    if (p.real() >= cut) ++unstable;
  const Matrix zero_b = Matrix::Zero(0, model.inputs());
  const Matrix zero_c = Matrix::Zero(model.outputs(), 0);
  if (unstable == 0) {
    return {model, StateSpaceModel(Matrix(0, 0), zero_b, zero_c,
                                   Matrix::Zero(model.outputs(), model.inputs()),
                                   model.input_labels(), model.output_labels())};
  }
  const Matrix vs = invariant_subspace_basis(model.A(), [cut](Complex l) { return l.real() < cut; });
  const Matrix vu = invariant_subspace_basis(model.A(), [cut](Complex l) { return l.real() >= cut; });
  const Index ns = vs.cols(), nu = vu.cols();
  if (ns + nu != n) throw NumericalError("stable/unstable splitting failed");
  Matrix t(n, n);
  t << vs, vu;
  Eigen::FullPivLU<Matrix> lu(t);
  if (lu.rcond() < 1e-12) throw NumericalError("stable and unstable subspaces are nearly parallel");
  const Matrix at = lu.solve(model.A() * t);
  const Matrix bt = lu.solve(model.B());
  const Matrix ct = model.C() * t;
  return {StateSpaceModel(at.topLeftCorner(ns, ns), bt.topRows(ns), ct.leftCols(ns), model.D(),
                          model.input_labels(), model.output_labels()),
          StateSpaceModel(at.bottomRightCorner(nu, nu), bt.bottomRows(nu), ct.rightCols(nu),
                          Matrix::Zero(model.outputs(), model.inputs()), model.input_labels(),
                          model.output_labels())};
}

StateSpaceModel reduction_weight(const StateSpaceModel& plant, const StateSpaceModel& controller,
                                 int sign) {
  const StateSpaceModel negative_form = sign > 0 ? negate(controller) : controller;
  return feedback(plant, negative_form, -1);
}

WeightedReduction weighted_reduce(const StateSpaceModel& controller, const StateSpaceModel& plant,
                                  Index target_order, int sign) {
  const Index n = controller.states();
  if (target_order < 0 || target_order > n)
    throw InputError("target order must lie in [0, controller order]");
  const StateSpaceModel weight = reduction_weight(plant, controller, sign);
  if (!is_stable(weight))
    throw NumericalError("weighted reduction needs a stable closed loop with the full controller");

  WeightedReduction out{controller, {}, 0, {}};
  const StableSplit split = split_stable(controller);
  out.unstable_states = split.unstable.states();
  const Index stable_target = target_order - out.unstable_states;
  if (stable_target < 0)
    throw InputError("target order is below the number of unstable controller states (" +
                     std::to_string(out.unstable_states) + ")");

  // Input-weighted cascade: signals pass through W, then the stable part.
  const StateSpaceModel& cs = split.stable;
  const StateSpaceModel cascade = series(weight, cs);
  const Matrix p_all = solve_lyapunov(cascade.A(), cascade.B() * cascade.B().transpose());
  const Index ns = cs.states();
  const Matrix p_weighted = p_all.bottomRightCorner(ns, ns);
  const Matrix q_obs = solve_lyapunov(cs.A().transpose(), cs.C().transpose() * cs.C());

  Index clipped = 0;
  double most_negative = 0.0;
  const Matrix lc = psd_factor(p_weighted, &clipped, &most_negative);
  if (clipped > 0) {
    std::ostringstream msg;
    msg << "weighted gramian had " << clipped << " negative eigenvalue(s) (most negative "
        << most_negative << "), clipped at zero";
    out.warnings.push_back(msg.str());
  }
  const Matrix lo = psd_factor(q_obs);
  StateSpaceModel reduced_stable = cs;
  try {
    reduced_stable = project(cs, lc, lo, stable_target, &out.weighted_hsv);
  } catch (const NumericalError&) {
    // Full order on a non-minimal realization: nothing to balance against.
    if (target_order != n) throw;
    out.warnings.push_back("weighted gramian product is rank deficient; controller kept as is");
  }
  out.reduced = out.unstable_states > 0 ? parallel(reduced_stable, split.unstable) : reduced_stable;
  out.reduced = out.reduced.with_labels(controller.input_labels(), controller.output_labels());
  return out;
}

WeightedReduction weighted_reduce(const ControllerRealization& controller, Index target_order) {
  return weighted_reduce(controller.model, controller.plant.model, target_order, +1);
}

ReductionCheck verify_reduced(const StateSpaceModel& plant, const StateSpaceModel& full_controller,
                              const StateSpaceModel& reduced_controller, int sign) {
  ReductionCheck check;
  const StateSpaceModel loop = closed_loop(plant, reduced_controller, sign);
  check.closed_loop_abscissa = loop.states() > 0 ? spectral_abscissa(loop.A())
                                                 : -std::numeric_limits<double>::infinity();
  check.stable = check.closed_loop_abscissa < 0.0;

  const StateSpaceModel weight = reduction_weight(plant, full_controller, sign);
  if (!is_stable(weight)) {
    check.weighted_error = std::numeric_limits<double>::infinity();
    return check;
  }
  const StateSpaceModel error =
      series(weight, parallel(full_controller, negate(reduced_controller)));
  const StableSplit split = split_stable(error);
  if (split.unstable.states() > 0) {
    // Unstable modes shared by both controllers cancel in the difference;
    // anything else makes the error unbounded.
    double residual = 0.0, reference = 0.0;
    for (double w : candidate_frequencies(error)) {
      if (w == 0.0) continue;
      residual = std::max(residual, sigma_at(split.unstable, w));
      reference = std::max(reference, sigma_at(split.stable, w));
    }
    if (residual > 1e-9 * std::max(reference, 1.0)) {
      check.weighted_error = std::numeric_limits<double>::infinity();
      return check;
    }
  }
  check.weighted_error = hinf_norm(split.stable);
  return check;
}

}  // namespace cavlock
