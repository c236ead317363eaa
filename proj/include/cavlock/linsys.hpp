#pragma once

#include <complex>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace cavlock {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using Complex = std::complex<double>;
using Index = Eigen::Index;
using Labels = std::vector<std::string>;

namespace detail {

/// Shared storage of an (A, B, C, D) quadruple with channel labels. Validates
/// dimensions on construction and is immutable afterwards.
class Realization {
 public:
  Realization(Matrix a, Matrix b, Matrix c, Matrix d, Labels input_labels,
              Labels output_labels);

  const Matrix& A() const { return a_; }
  const Matrix& B() const { return b_; }
  const Matrix& C() const { return c_; }
  const Matrix& D() const { return d_; }
  const Labels& input_labels() const { return input_labels_; }
  const Labels& output_labels() const { return output_labels_; }

  Index states() const { return a_.rows(); }
  Index inputs() const { return d_.cols(); }
  Index outputs() const { return d_.rows(); }

  /// Transfer matrix C (sI - A)^{-1} B + D at an arbitrary complex point.
  /// Throws NumericalError when s is (numerically) an eigenvalue of A.
  CMatrix evaluate(Complex s) const;

 private:
  Matrix a_, b_, c_, d_;
  Labels input_labels_, output_labels_;
};

}  // namespace detail

/// Continuous-time LTI system  x' = Ax + Bu,  y = Cx + Du.
class StateSpaceModel : public detail::Realization {
 public:
  StateSpaceModel(Matrix a, Matrix b, Matrix c, Matrix d,
                  Labels input_labels = {}, Labels output_labels = {});

  /// n = 0 model y = D u.
  static StateSpaceModel static_gain(const Matrix& d, Labels input_labels = {},
                                     Labels output_labels = {});

  StateSpaceModel with_labels(Labels input_labels, Labels output_labels) const;
};

/// Discrete-time LTI system  x[k+1] = Ad x[k] + Bd u[k],  y = Cd x + Dd u.
class DiscreteStateSpaceModel : public detail::Realization {
 public:
  DiscreteStateSpaceModel(Matrix ad, Matrix bd, Matrix cd, Matrix dd, double ts,
                          Labels input_labels = {}, Labels output_labels = {});

  double ts() const { return ts_; }

 private:
  double ts_;
};

/// Sampled complex frequency response on a strictly increasing grid.
class FrequencyResponseData {
 public:
  FrequencyResponseData(std::vector<double> freqs_hz, std::vector<CMatrix> response);

  const std::vector<double>& freqs_hz() const { return freqs_hz_; }
  const std::vector<CMatrix>& response() const { return response_; }
  std::size_t size() const { return freqs_hz_.size(); }
  Index outputs() const { return response_.front().rows(); }
  Index inputs() const { return response_.front().cols(); }

  /// Element-wise product H_k <- H_k * other_k (matrix product per sample).
  FrequencyResponseData multiplied_by(const FrequencyResponseData& other) const;
  FrequencyResponseData scaled(double factor) const;

 private:
  std::vector<double> freqs_hz_;
  std::vector<CMatrix> response_;
};

/// Response at s = i*omega (rad/s).
CMatrix eval_response(const StateSpaceModel& model, double omega);
/// Response at z = exp(i*omega*Ts) (omega in rad/s).
CMatrix eval_response(const DiscreteStateSpaceModel& model, double omega);

FrequencyResponseData frequency_response(const StateSpaceModel& model,
                                         const std::vector<double>& freqs_hz);
FrequencyResponseData frequency_response(const DiscreteStateSpaceModel& model,
                                         const std::vector<double>& freqs_hz);

std::vector<Complex> poles(const Matrix& a);
std::vector<Complex> poles(const StateSpaceModel& model);
std::vector<Complex> poles(const DiscreteStateSpaceModel& model);

/// Continuous: max Re(p) < -tol_margin. Discrete: spectral radius < 1 - tol_margin.
bool is_stable(const StateSpaceModel& model, double tol_margin = 0.0);
bool is_stable(const DiscreteStateSpaceModel& model, double tol_margin = 0.0);
double spectral_abscissa(const Matrix& a);

/// Cascade: u -> first -> second -> y.
StateSpaceModel series(const StateSpaceModel& first, const StateSpaceModel& second);

/// Sum of two systems sharing inputs and outputs.
StateSpaceModel parallel(const StateSpaceModel& g1, const StateSpaceModel& g2);

StateSpaceModel negate(const StateSpaceModel& g);

/// Selects input columns and output rows.
StateSpaceModel subsystem(const StateSpaceModel& g, const std::vector<Index>& inputs,
                          const std::vector<Index>& outputs);

/// State coordinates x = T * x_new.
StateSpaceModel similarity_transform(const StateSpaceModel& g, const Matrix& t);

/// Diagonal (power-of-two) state scaling that evens out row and column norms.
/// The transfer function is unchanged exactly.
StateSpaceModel diagonal_scaling(const StateSpaceModel& g);

/// Full closed loop of  y = P (u + d),  u = C (r + sign * y).
/// Inputs are [r; d], outputs are [y; u]. sign = -1 is negative feedback.
StateSpaceModel closed_loop(const StateSpaceModel& plant, const StateSpaceModel& controller,
                            int sign = -1);

/// Reference-to-output map of the feedback interconnection (subset of closed_loop).
StateSpaceModel feedback(const StateSpaceModel& plant, const StateSpaceModel& controller,
                         int sign = -1);

/// n log-spaced points from lo to hi inclusive.
std::vector<double> log_space(double lo, double hi, std::size_t n);

/// Largest singular value of a complex matrix.
double sigma_max(const CMatrix& m);

}  // namespace cavlock
