#include "cavlock/linsys.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "cavlock/errors.hpp"

namespace cavlock {

namespace {

Labels default_labels(const char* prefix, Index count) {
  Labels out;
  for (Index i = 0; i < count; ++i) out.push_back(prefix + std::to_string(i));
  return out;
}

template <typename T>
std::vector<T> pick(const std::vector<T>& items, const std::vector<Index>& idx) {
  std::vector<T> out;
  out.reserve(idx.size());
  for (Index i : idx) out.push_back(items.at(static_cast<std::size_t>(i)));
  return out;
}

Labels concat(Labels a, const Labels& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

}  // namespace

namespace detail {

Realization::Realization(Matrix a, Matrix b, Matrix c, Matrix d, Labels input_labels,
                         Labels output_labels)
    : a_(std::move(a)),
      b_(std::move(b)),
      c_(std::move(c)),
      d_(std::move(d)),
      input_labels_(std::move(input_labels)),
      output_labels_(std::move(output_labels)) {
  const Index n = a_.rows();
  std::ostringstream err;
  if (a_.cols() != n) err << "A must be square (got " << a_.rows() << "x" << a_.cols() << "); ";
  if (b_.rows() != n) err << "B has " << b_.rows() << " rows, expected " << n << "; ";
  if (c_.cols() != n) err << "C has " << c_.cols() << " columns, expected " << n << "; ";
  if (d_.rows() != c_.rows()) err << "D rows " << d_.rows() << " != C rows " << c_.rows() << "; ";
  if (d_.cols() != b_.cols()) err << "D cols " << d_.cols() << " != B cols " << b_.cols() << "; ";
  if (!err.str().empty()) throw InputError("inconsistent state-space dimensions: " + err.str());
  if (!a_.allFinite() || !b_.allFinite() || !c_.allFinite() || !d_.allFinite())
    throw InputError("state-space matrices contain non-finite entries");

  if (input_labels_.empty()) input_labels_ = default_labels("u", d_.cols());
  if (output_labels_.empty()) output_labels_ = default_labels("y", d_.rows());
  if (static_cast<Index>(input_labels_.size()) != d_.cols())
    throw InputError("input label count does not match input dimension");
  if (static_cast<Index>(output_labels_.size()) != d_.rows())
    throw InputError("output label count does not match output dimension");
}

CMatrix Realization::evaluate(Complex s) const {
  const Index n = states();
  if (n == 0) return d_.cast<Complex>();
  CMatrix resolvent = -a_.cast<Complex>();
  resolvent.diagonal().array() += s;
  Eigen::PartialPivLU<CMatrix> lu(resolvent);
  if (!(lu.rcond() > 64.0 * std::numeric_limits<double>::epsilon())) {
    std::ostringstream msg;
    msg << "evaluation at pole: sI - A is singular at s = " << s;
    throw NumericalError(msg.str());
  }
  return c_.cast<Complex>() * lu.solve(b_.cast<Complex>()) + d_.cast<Complex>();
}

}  // namespace detail

StateSpaceModel::StateSpaceModel(Matrix a, Matrix b, Matrix c, Matrix d, Labels input_labels,
                                 Labels output_labels)
    : Realization(std::move(a), std::move(b), std::move(c), std::move(d),
                  std::move(input_labels), std::move(output_labels)) {}

StateSpaceModel StateSpaceModel::static_gain(const Matrix& d, Labels input_labels,
                                             Labels output_labels) {
  return StateSpaceModel(Matrix(0, 0), Matrix(0, d.cols()), Matrix(d.rows(), 0), d,
                         std::move(input_labels), std::move(output_labels));
}

StateSpaceModel StateSpaceModel::with_labels(Labels input_labels, Labels output_labels) const {
  return StateSpaceModel(A(), B(), C(), D(), std::move(input_labels), std::move(output_labels));
}

DiscreteStateSpaceModel::DiscreteStateSpaceModel(Matrix ad, Matrix bd, Matrix cd, Matrix dd,
                                                 double ts, Labels input_labels,
                                                 Labels output_labels)
    : Realization(std::move(ad), std::move(bd), std::move(cd), std::move(dd),
                  std::move(input_labels), std::move(output_labels)),
      ts_(ts) {
  if (!(ts > 0.0) || !std::isfinite(ts)) throw InputError("sample period must be positive");
}

FrequencyResponseData::FrequencyResponseData(std::vector<double> freqs_hz,
                                             std::vector<CMatrix> response)
    : freqs_hz_(std::move(freqs_hz)), response_(std::move(response)) {
  if (freqs_hz_.empty()) throw InputError("frequency response data is empty");
  if (freqs_hz_.size() != response_.size())
    throw InputError("frequency grid and response sample counts differ");
  for (std::size_t k = 0; k < freqs_hz_.size(); ++k) {
    if (!(freqs_hz_[k] > 0.0) || !std::isfinite(freqs_hz_[k]))
      throw InputError("frequencies must be positive and finite");
    if (k > 0 && !(freqs_hz_[k] > freqs_hz_[k - 1]))
      throw InputError("frequencies must be strictly increasing");
    if (response_[k].rows() != response_[0].rows() || response_[k].cols() != response_[0].cols())
      throw InputError("response dimensions vary across samples");
  }
}

FrequencyResponseData FrequencyResponseData::multiplied_by(
    const FrequencyResponseData& other) const {
  if (other.freqs_hz_ != freqs_hz_)
    throw InputError("cannot multiply frequency responses on different grids");
  std::vector<CMatrix> out;
  out.reserve(size());
  for (std::size_t k = 0; k < size(); ++k) {
    if (response_[k].cols() != other.response_[k].rows())
      throw InputError("frequency response product dimension mismatch");
    out.push_back(response_[k] * other.response_[k]);
  }
  return {freqs_hz_, std::move(out)};
}

FrequencyResponseData FrequencyResponseData::scaled(double factor) const {
  std::vector<CMatrix> out = response_;
  for (auto& h : out) h *= factor;
  return {freqs_hz_, std::move(out)};
}

CMatrix eval_response(const StateSpaceModel& model, double omega) {
  return model.evaluate(Complex(0.0, omega));
}

CMatrix eval_response(const DiscreteStateSpaceModel& model, double omega) {
  return model.evaluate(std::polar(1.0, omega * model.ts()));
}

FrequencyResponseData frequency_response(const StateSpaceModel& model,
                                         const std::vector<double>& freqs_hz) {
  std::vector<CMatrix> h;
  h.reserve(freqs_hz.size());
  for (double f : freqs_hz) h.push_back(eval_response(model, 2.0 * std::numbers::pi * f));
  return {freqs_hz, std::move(h)};
}

FrequencyResponseData frequency_response(const DiscreteStateSpaceModel& model,
                                         const std::vector<double>& freqs_hz) {
  std::vector<CMatrix> h;
  h.reserve(freqs_hz.size());
  for (double f : freqs_hz) h.push_back(eval_response(model, 2.0 * std::numbers::pi * f));
  return {freqs_hz, std::move(h)};
}

std::vector<Complex> poles(const Matrix& a) {
  if (a.rows() == 0) return {};
  Eigen::EigenSolver<Matrix> es(a, false);
  if (es.info() != Eigen::Success) throw NumericalError("eigenvalue solver did not converge");
  const CVector ev = es.eigenvalues();
  return {ev.data(), ev.data() + ev.size()};
}

std::vector<Complex> poles(const StateSpaceModel& model) { return poles(model.A()); }
std::vector<Complex> poles(const DiscreteStateSpaceModel& model) { return poles(model.A()); }

double spectral_abscissa(const Matrix& a) {
  double worst = -std::numeric_limits<double>::infinity();
  for (const Complex& p : poles(a)) worst = std::max(worst, p.real());
  return worst;
}

bool is_stable(const StateSpaceModel& model, double tol_margin) {
  if (model.states() == 0) return true;
  return spectral_abscissa(model.A()) < -tol_margin;
}

bool is_stable(const DiscreteStateSpaceModel& model, double tol_margin) {
  double radius = 0.0;
  for (const Complex& p : poles(model)) radius = std::max(radius, std::abs(p));
  return radius < 1.0 - tol_margin;
}

StateSpaceModel series(const StateSpaceModel& first, const StateSpaceModel& second) {
  if (first.outputs() != second.inputs())
    throw InputError("series: output dimension of first (" + std::to_string(first.outputs()) +
                     ") != input dimension of second (" + std::to_string(second.inputs()) + ")");
  const Index n1 = first.states(), n2 = second.states();
  Matrix a = Matrix::Zero(n1 + n2, n1 + n2);
  a.topLeftCorner(n1, n1) = first.A();
  a.bottomLeftCorner(n2, n1) = second.B() * first.C();
  a.bottomRightCorner(n2, n2) = second.A();
  Matrix b(n1 + n2, first.inputs());
  b << first.B(), second.B() * first.D();
  Matrix c(second.outputs(), n1 + n2);
  c << second.D() * first.C(), second.C();
  return {a, b, c, second.D() * first.D(), first.input_labels(), second.output_labels()};
}

StateSpaceModel parallel(const StateSpaceModel& g1, const StateSpaceModel& g2) {
  if (g1.inputs() != g2.inputs() || g1.outputs() != g2.outputs())
    throw InputError("parallel: systems must share input and output dimensions");
  const Index n1 = g1.states(), n2 = g2.states();
  Matrix a = Matrix::Zero(n1 + n2, n1 + n2);
  a.topLeftCorner(n1, n1) = g1.A();
  a.bottomRightCorner(n2, n2) = g2.A();
  Matrix b(n1 + n2, g1.inputs());
  b << g1.B(), g2.B();
  Matrix c(g1.outputs(), n1 + n2);
  c << g1.C(), g2.C();
  return {a, b, c, g1.D() + g2.D(), g1.input_labels(), g1.output_labels()};
}

StateSpaceModel negate(const StateSpaceModel& g) {
  return {g.A(), g.B(), -g.C(), -g.D(), g.input_labels(), g.output_labels()};
}

StateSpaceModel subsystem(const StateSpaceModel& g, const std::vector<Index>& inputs,
                          const std::vector<Index>& outputs) {
  Matrix b(g.states(), static_cast<Index>(inputs.size()));
  Matrix c(static_cast<Index>(outputs.size()), g.states());
  Matrix d(static_cast<Index>(outputs.size()), static_cast<Index>(inputs.size()));
  for (std::size_t j = 0; j < inputs.size(); ++j) {
    if (inputs[j] < 0 || inputs[j] >= g.inputs()) throw InputError("subsystem: input index out of range");
    b.col(static_cast<Index>(j)) = g.B().col(inputs[j]);
  }
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    if (outputs[i] < 0 || outputs[i] >= g.outputs()) throw InputError("subsystem: output index out of range");
    c.row(static_cast<Index>(i)) = g.C().row(outputs[i]);
    for (std::size_t j = 0; j < inputs.size(); ++j)
      d(static_cast<Index>(i), static_cast<Index>(j)) = g.D()(outputs[i], inputs[j]);
  }
  return {g.A(), b, c, d, pick(g.input_labels(), inputs), pick(g.output_labels(), outputs)};
}

StateSpaceModel similarity_transform(const StateSpaceModel& g, const Matrix& t) {
  if (t.rows() != g.states() || t.cols() != g.states())
    throw InputError("similarity transform has wrong size");
  Eigen::PartialPivLU<Matrix> lu(t);
  return {lu.solve(g.A() * t), lu.solve(g.B()), g.C() * t, g.D(), g.input_labels(),
          g.output_labels()};
}

StateSpaceModel diagonal_scaling(const StateSpaceModel& g) {
  const Index n = g.states();
  Matrix a = g.A(), b = g.B(), c = g.C();
  // Parlett-Reinsch style: powers of two equalize the off-diagonal row and
  // column norms of the system matrix [[A, B], [C, 0]] over the state indices.
  bool changed = true;
  for (int sweep = 0; changed && sweep < 100; ++sweep) {
    changed = false;
    for (Index i = 0; i < n; ++i) {
      double col = c.col(i).squaredNorm(), row = b.row(i).squaredNorm();
      for (Index j = 0; j < n; ++j) {
        if (j == i) continue;
        col += a(j, i) * a(j, i);
        row += a(i, j) * a(i, j);
      }
      col = std::sqrt(col);
      row = std::sqrt(row);
      if (col == 0.0 || row == 0.0) continue;
      double f = 1.0;
      const double total = col + row;
      while (col < row / 2.0) {
        col *= 2.0;
        row /= 2.0;
        f *= 2.0;
      }
      while (col >= row * 2.0) {
        col /= 2.0;
        row *= 2.0;
        f /= 2.0;
      }
      if (col + row < 0.95 * total) {
        changed = true;
        // x_i = f * x_i_new: column i times f, row i divided by f.
        a.col(i) *= f;
        c.col(i) *= f;
        a.row(i) /= f;
        b.row(i) /= f;
      }
    }
  }
  return {a, b, c, g.D(), g.input_labels(), g.output_labels()};
}

StateSpaceModel closed_loop(const StateSpaceModel& plant, const StateSpaceModel& controller,
                            int sign) {
  if (sign != 1 && sign != -1) throw InputError("feedback sign must be +1 or -1");
  if (controller.inputs() != plant.outputs() || controller.outputs() != plant.inputs())
    throw InputError("feedback: controller must map plant outputs to plant inputs");
  const double s = sign;
  const Index np = plant.states(), nc = controller.states();
  const Index m = plant.inputs(), p = plant.outputs();
  const Matrix &ap = plant.A(), &bp = plant.B(), &cp = plant.C(), &dp = plant.D();
  const Matrix &ac = controller.A(), &bc = controller.B(), &cc = controller.C(),
               &dc = controller.D();

  const Matrix loop = Matrix::Identity(m, m) - s * dc * dp;
  Eigen::FullPivLU<Matrix> lu(loop);
  if (!lu.isInvertible() || lu.rcond() < 1e-12)
    throw InputError("algebraic loop: I - sign*Dc*Dp is singular");

  // u = Ux x + Ur r + Ud d with x = [xp; xc]
  Matrix ux(m, np + nc);
  ux << lu.solve(s * dc * cp), lu.solve(cc);
  const Matrix ur = lu.solve(dc);
  const Matrix ud = lu.solve(s * dc * dp);

  // y = Cp xp + Dp (u + d)
  Matrix yx = dp * ux;
  yx.leftCols(np) += cp;
  const Matrix yr = dp * ur;
  const Matrix yd = dp * (ud + Matrix::Identity(m, m));

  Matrix a(np + nc, np + nc), b(np + nc, p + m);
  a.topRows(np) = bp * ux;
  a.topLeftCorner(np, np) += ap;
  b.topRows(np) << bp * ur, bp * (ud + Matrix::Identity(m, m));
  // e = r + s y
  a.bottomRows(nc) = s * bc * yx;
  a.bottomRightCorner(nc, nc) += ac;
  b.bottomRows(nc) << bc * (Matrix::Identity(p, p) + s * yr), s * bc * yd;

  Matrix c(p + m, np + nc), d(p + m, p + m);
  c << yx, ux;
  d << yr, yd, ur, ud;

  Labels in = concat(controller.input_labels(), plant.input_labels());
  for (Index i = 0; i < p; ++i) in[static_cast<std::size_t>(i)] = "r:" + in[static_cast<std::size_t>(i)];
  for (Index i = p; i < p + m; ++i) in[static_cast<std::size_t>(i)] = "d:" + in[static_cast<std::size_t>(i)];
  return {a, b, c, d, in, concat(plant.output_labels(), plant.input_labels())};
}

StateSpaceModel feedback(const StateSpaceModel& plant, const StateSpaceModel& controller,
                         int sign) {
  const StateSpaceModel full = closed_loop(plant, controller, sign);
  std::vector<Index> in, out;
  for (Index i = 0; i < plant.outputs(); ++i) {
    in.push_back(i);
    out.push_back(i);
  }
  return subsystem(full, in, out);
}

std::vector<double> log_space(double lo, double hi, std::size_t n) {
  if (n == 0) return {};
  if (n == 1) return {lo};
  std::vector<double> out(n);
  const double a = std::log10(lo), b = std::log10(hi);
  for (std::size_t k = 0; k < n; ++k)
    out[k] = std::pow(10.0, a + (b - a) * static_cast<double>(k) / static_cast<double>(n - 1));
  out.front() = lo;
  out.back() = hi;
  return out;
}

double sigma_max(const CMatrix& m) {
  if (m.size() == 0) return 0.0;
  if (m.size() == 1) return std::abs(m(0, 0));
  Eigen::JacobiSVD<CMatrix> svd(m);
  return svd.singularValues()(0);
}

}  // namespace cavlock
