#include <gtest/gtest.h>

#include <unsupported/Eigen/MatrixFunctions>

#include "cavlock/cavity.hpp"
#include "cavlock/errors.hpp"
#include "cavlock/rng.hpp"
#include "cavlock/synthetic.hpp"
#include "cavlock/sysid.hpp"
#include "test_util.hpp"

using namespace cavlock;
using namespace cavlock::testing;

namespace {

constexpr double kPi = std::numbers::pi;

// Delta -> z channel of the cavity model.
StateSpaceModel delta_to_z(const CavityParams& p) { return subsystem(build_cavity_model(p), {0}, {0}); }

FrequencyResponseData sampled(const StateSpaceModel& g, std::size_t n, double f_lo, double f_hi) {
  return frequency_response(g, log_space(f_lo, f_hi, n));
}

}  // namespace

TEST(Detuning, OnResonanceIsZero) {
  DetuningParams p;
  p.q = 12345;
  p.n_index = 1.5;
  p.length_m = 0.25;
  p.omega_laser = static_cast<double>(p.q) * 2.0 * kPi * p.c / (p.n_index * p.length_m);
  EXPECT_NEAR(detuning(p), 0.0, 1e-15 * p.omega_laser);
}

TEST(Detuning, DirectSubstitutionAndMonotonicity) {
  DetuningParams p;
  p.q = 2;
  p.n_index = 1.0;
  p.length_m = 1.0;
  p.omega_laser = 0.0;
  EXPECT_NEAR(detuning(p), 4.0 * kPi * p.c, 1e-6);
  const double before = detuning(p);
  p.length_m = 1.1;
  EXPECT_LT(detuning(p), before);
  p.q = 0;
  EXPECT_THROW(detuning(p), InputError);
}

TEST(CavityModel, StructureAndLabels) {
  const auto p = CavityParams::demo();
  const auto g = build_cavity_model(p);
  EXPECT_EQ(g.states(), 2);
  EXPECT_EQ(g.inputs(), 8);
  EXPECT_EQ(g.outputs(), 2);
  EXPECT_EQ(g.output_labels()[0], "z");
  EXPECT_EQ(g.output_labels()[1], "y");
  EXPECT_EQ(g.input_labels()[0], "delta");
  EXPECT_NEAR(g.A()(0, 0), -p.kappa() / 2.0, 0.0);
  EXPECT_NEAR(g.A()(1, 1), -p.kappa() / 2.0, 0.0);
  EXPECT_EQ(g.A()(0, 1), 0.0);
  EXPECT_TRUE(is_stable(g));
}

TEST(CavityModel, DeltaToZIsFirstOrderWithCornerHalfKappa) {
  const auto p = CavityParams::demo();
  const auto g = delta_to_z(p);
  const double dc = std::abs(eval_response(g, 0.0)(0, 0));
  EXPECT_NEAR(dc, cavity_dc_gain(p), 1e-12 * dc);
  EXPECT_NEAR(dc, 4.0 * p.alpha * p.k2 * std::sqrt(p.kappa0) * std::sin(p.phi) / p.kappa(), 1e-12 * dc);
  const double at_corner = std::abs(eval_response(g, p.kappa() / 2.0)(0, 0));
  EXPECT_NEAR(at_corner / (dc / std::sqrt(2.0)), 1.0, 1e-6);
  // First order: -20 dB/decade well above the corner.
  const double w = 1e3 * p.kappa();
  const double slope = 20.0 * std::log10(std::abs(eval_response(g, 10.0 * w)(0, 0)) /
                                         std::abs(eval_response(g, w)(0, 0)));
  EXPECT_NEAR(slope, -20.0, 1e-3);
}

TEST(CavityModel, ZeroPhaseHasZeroDcGain) {
  auto p = CavityParams::demo();
  p.phi = 0.0;
  EXPECT_EQ(cavity_dc_gain(p), 0.0);
  EXPECT_NEAR(std::abs(eval_response(delta_to_z(p), 0.0)(0, 0)), 0.0, 1e-15);
}

TEST(CavityModel, UndrivenStateDecays) {
  const auto g = build_cavity_model(CavityParams::demo());
  Vector x(2);
  x << 1.0, -2.0;
  // Exact solution of x' = A x with A = -kappa/2 I.
  const double t = 20.0 / (CavityParams::demo().kappa() / 2.0);
  const Vector xt = (g.A() * t).exp() * x;
  EXPECT_LT(xt.norm(), 1e-8 * x.norm());
}

TEST(CavityModel, RotationBlockIsOrthogonal) {
  for (double phi : {0.0, 0.3, kPi / 2.0, 2.5}) {
    auto p = CavityParams::demo();
    p.phi = phi;
    const auto g = build_cavity_model(p);
    const Matrix r = g.B().block(0, 1, 2, 2) / (-std::sqrt(p.kappa0));
    EXPECT_LT((r.transpose() * r - Matrix::Identity(2, 2)).norm(), 1e-14);
    EXPECT_LT((g.B().block(0, 3, 2, 2) + std::sqrt(p.kappa1) * Matrix::Identity(2, 2)).norm(), 1e-12);
    EXPECT_LT((g.B().block(0, 5, 2, 2) + std::sqrt(p.kappaL) * Matrix::Identity(2, 2)).norm(), 1e-12);
  }
}

TEST(CavityModel, MeasuredOutputFeedthrough) {
  const auto p = CavityParams::demo();
  const auto g = build_cavity_model(p);
  EXPECT_EQ(g.D()(1, 1), p.k2);  // q0 feedthrough
  EXPECT_EQ(g.D()(1, 7), 1.0);   // w2
  EXPECT_EQ(g.D()(0, 7), 0.0);
  EXPECT_LT((g.C().row(0) - g.C().row(1)).norm(), 1e-15);
}

TEST(CavityModel, InvalidParamsRejected) {
  auto p = CavityParams::demo();
  p.kappa0 = -1.0;
  EXPECT_THROW(build_cavity_model(p), InputError);
}

TEST(AugmentIntegrator, StructureAndPoles) {
  std::mt19937_64 rng(8);
  const auto plant = random_stable(rng, 4, 1, 1);
  const auto aug = augment_integrator(plant);
  const Index n = plant.states();
  ASSERT_EQ(aug.model.states(), n + 1);
  EXPECT_EQ(aug.plant_states, n);
  EXPECT_EQ((aug.model.A().block(n, 0, 1, n) - plant.C()).norm(), 0.0);
  EXPECT_EQ(aug.model.A().col(n).norm(), 0.0);
  EXPECT_EQ(aug.model.B()(n, 0), 0.0);
  EXPECT_EQ(aug.model.C()(1, n), 1.0);
  auto p = poles(aug.model);
  int zeros = 0;
  for (auto l : p) zeros += std::abs(l) < 1e-12;
  EXPECT_EQ(zeros, 1);
  for (auto l : poles(plant)) {
    double best = 1e9;
    for (auto m : p) best = std::min(best, std::abs(l - m));
    EXPECT_LT(best, 1e-10);
  }
}

TEST(AugmentIntegrator, KeepsUToY1) {
  std::mt19937_64 rng(10);
  const auto plant = random_stable(rng, 5, 1, 1);
  const auto aug = augment_integrator(plant);
  const auto y1 = subsystem(aug.model, {0}, {0});
  for (double w : log_space(0.01, 100.0, 40))
    EXPECT_LT(rel_diff(eval_response(y1, w), eval_response(plant, w)), 1e-10);
}

TEST(AugmentIntegrator, StepDrivesLinearGrowthOfIntegral) {
  const auto plant = ss(-2.0, 2.0, 1.5, 0.0);  // DC gain 1.5
  const auto aug = augment_integrator(plant);
  // y2(t) for a unit step is the integral of 1.5 (1 - e^{-2t}); slope tends to 1.5.
  const Matrix a = aug.model.A();
  const Index n = a.rows();
  Matrix m = Matrix::Zero(n + 1, n + 1);
  m.topLeftCorner(n, n) = a;
  m.topRightCorner(n, 1) = aug.model.B();
  auto y2_at = [&](double t) {
    const Matrix e = (m * t).exp();
    return (aug.model.C().row(1) * e.topRightCorner(n, 1))(0);
  };
  const double slope = (y2_at(20.0) - y2_at(10.0)) / 10.0;
  EXPECT_NEAR(slope, 1.5, 1e-9);
}

TEST(AntialiasFilter, CornerDcAndRolloff) {
  const auto f = antialias_filter(8, 2500.0);
  EXPECT_EQ(f.states(), 8);
  EXPECT_TRUE(is_stable(f));
  const double dc_db = 20.0 * std::log10(std::abs(eval_response(f, 0.0)(0, 0)));
  EXPECT_NEAR(dc_db, 0.0, 1e-10);
  const double corner_db = 20.0 * std::log10(std::abs(eval_response(f, 2.0 * kPi * 2500.0)(0, 0)));
  EXPECT_NEAR(corner_db, -3.0103, 0.1);
  const double w = 2.0 * kPi * 2.5e6;
  const double slope = 20.0 * std::log10(std::abs(eval_response(f, 10.0 * w)(0, 0)) / std::abs(eval_response(f, w)(0, 0)));
  EXPECT_NEAR(slope, -160.0, 0.01);
}

TEST(AntialiasFilter, OddOrderAndValidation) {
  const auto f = antialias_filter(5, 100.0);
  EXPECT_EQ(f.states(), 5);
  EXPECT_NEAR(std::abs(eval_response(f, 2.0 * kPi * 100.0)(0, 0)), 1.0 / std::sqrt(2.0), 1e-12);
  EXPECT_THROW(antialias_filter(0, 100.0), InputError);
  EXPECT_THROW(antialias_filter(4, -1.0), InputError);
}

TEST(Identify, ResonatorRecovered) {
  const double w0 = 2.0 * kPi * 520.0;
  const auto g = resonator(w0, 1.0 / (2.0 * 20.0));
  const auto data = sampled(g, 200, 10.0, 1e4);
  SysIdConfig cfg;
  cfg.model_order = 2;
  const auto id = identify(data, cfg);
  EXPECT_EQ(id.model.states(), 2);
  EXPECT_LT(id.report.relative_rms_error, 1e-6);
  EXPECT_LT(fit_error(id.model, data).relative_rms_error, 1e-6);
}

TEST(Identify, StaticGainFlat) {
  const auto data = sampled(gain(3.7), 60, 1.0, 1000.0);
  SysIdConfig cfg;
  cfg.model_order = 1;
  cfg.allow_unstable = true;
  const auto id = identify(data, cfg);
  EXPECT_EQ(id.model.states(), 1);
  for (double f : log_space(1.0, 1000.0, 50))
    EXPECT_NEAR(std::abs(eval_response(id.model, 2.0 * kPi * f)(0, 0) - 3.7), 0.0, 1e-8);
  EXPECT_LT(id.report.trailing_sv_ratio, cfg.rank_tol);
  EXPECT_FALSE(id.report.warnings.empty());
}

TEST(Identify, InsufficientSamples) {
  SysIdConfig cfg;
  cfg.model_order = 4;  // q = 10 needs 20 samples
  EXPECT_THROW(identify(sampled(ss(-1, 1, 1, 0), 19, 0.01, 10.0), cfg), InputError);
  cfg.block_rows = 3;
  EXPECT_THROW(cfg.validate(), InputError);
}

TEST(Identify, RoundTripRandomModels) {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 24; ++trial) {
    const Index n = 1 + trial % 8;
    const auto g = random_stable(rng, n, 1, 1, trial % 2 == 0, 0.5, 50.0);
    const auto data = sampled(g, static_cast<std::size_t>(20 * n), 0.01, 100.0);
    SysIdConfig cfg;
    cfg.model_order = n;
    const auto id = identify(data, cfg);
    EXPECT_EQ(id.model.states(), n);
    EXPECT_LT(id.report.relative_rms_error, 1e-5) << "trial " << trial;
  }
}

TEST(Identify, NoisyRoundTrip) {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 10; ++trial) {
    const Index n = 2 + trial % 6;
    const auto g = random_stable(rng, n, 1, 1, false, 0.5, 50.0);
    SyntheticGrid grid;
    grid.f_min_hz = 0.01;
    grid.f_max_hz = 100.0;
    grid.points = static_cast<std::size_t>(20 * n);
    grid.relative_noise = 0.01;
    grid.seed = static_cast<std::uint64_t>(trial);
    const auto noisy = sample_response(g, grid);
    SysIdConfig cfg;
    cfg.model_order = n;
    cfg.allow_unstable = true;
    const auto id = identify(noisy, cfg);
    const auto clean = sampled(g, grid.points, grid.f_min_hz, grid.f_max_hz);
    EXPECT_LT(fit_error(id.model, clean).relative_rms_error, 0.05) << "trial " << trial;
  }
}

TEST(Identify, ScaleEquivariance) {
  std::mt19937_64 rng(31);
  const auto g = random_stable(rng, 4, 1, 1, true, 0.5, 20.0);
  const auto data = sampled(g, 80, 0.01, 50.0);
  SysIdConfig cfg;
  cfg.model_order = 4;
  const auto a = identify(data, cfg);
  const auto b = identify(data.scaled(7.5), cfg);
  for (double f : log_space(0.01, 50.0, 30)) {
    const double w = 2.0 * kPi * f;
    EXPECT_LT(rel_diff(eval_response(b.model, w), 7.5 * eval_response(a.model, w)), 1e-8);
  }
}

TEST(Identify, RelativeWeightingAndStrictlyProper) {
  const auto plant = synthetic_plant(SyntheticPlantParams::standard());
  SyntheticGrid grid;
  const auto data = sample_response(plant, grid);
  SysIdConfig cfg;
  cfg.model_order = 6;
  cfg.weighting = SampleWeighting::kRelative;
  cfg.strictly_proper = true;
  const auto id = identify(data, cfg);
  EXPECT_EQ(id.model.D().norm(), 0.0);
  EXPECT_LT(id.report.relative_rms_error, 1e-6);
}

TEST(Identify, DirectPathWithoutBilinearMap) {
  const auto g = ss(-3.0, 2.0, 1.0, 0.5);
  SysIdConfig cfg;
  cfg.model_order = 1;
  cfg.use_bilinear_map = false;
  const auto id = identify(sampled(g, 40, 0.01, 10.0), cfg);
  EXPECT_LT(id.report.relative_rms_error, 1e-8);
}

TEST(Identify, UnstableResultRejectedByDefault) {
  const auto g = ss(2.0, 1.0, 1.0, 0.0);  // unstable generator
  SysIdConfig cfg;
  cfg.model_order = 1;
  const auto data = sampled(g, 40, 0.01, 10.0);
  EXPECT_THROW(identify(data, cfg), NumericalError);
  cfg.allow_unstable = true;
  EXPECT_LT(identify(data, cfg).report.relative_rms_error, 1e-8);
}

TEST(FitError, SelfZeroAndDoubledGainOne) {
  std::mt19937_64 rng(12);
  const auto g = random_stable(rng, 3, 1, 1, true);
  const auto data = sampled(g, 50, 0.01, 10.0);
  EXPECT_NEAR(fit_error(g, data).relative_rms_error, 0.0, 1e-15);
  EXPECT_NEAR(fit_error(g, data.scaled(0.5)).relative_rms_error, 1.0, 1e-12);
  const auto doubled = series(g, gain(2.0));
  EXPECT_NEAR(fit_error(doubled, data).relative_rms_error, 1.0, 1e-12);
  EXPECT_NEAR(fit_error(doubled, data).max_abs_error_db, 20.0 * std::log10(2.0), 1e-10);
}

TEST(FitError, IndependentOfGridOrderingOfSums) {
  // Splitting the grid into halves and recombining the squared sums reproduces the total.
  std::mt19937_64 rng(13);
  const auto g = random_stable(rng, 3, 1, 1, true);
  const auto model = series(g, gain(1.1));
  const auto freqs = log_space(0.01, 10.0, 40);
  const auto all = frequency_response(g, freqs);
  const auto lo = frequency_response(g, std::vector<double>(freqs.begin(), freqs.begin() + 20));
  const auto hi = frequency_response(g, std::vector<double>(freqs.begin() + 20, freqs.end()));
  auto energy = [](const FrequencyResponseData& d) {
    double s = 0;
    for (const auto& h : d.response()) s += h.squaredNorm();
    return s;
  };
  const double e_lo = std::pow(fit_error(model, lo).relative_rms_error, 2) * energy(lo);
  const double e_hi = std::pow(fit_error(model, hi).relative_rms_error, 2) * energy(hi);
  EXPECT_NEAR(std::sqrt((e_lo + e_hi) / energy(all)), fit_error(model, all).relative_rms_error, 1e-14);
}

TEST(Synthetic, PlantHasThreeModes) {
  const auto p = synthetic_plant(SyntheticPlantParams::standard());
  EXPECT_EQ(p.states(), 6);
  EXPECT_TRUE(is_stable(p));
  std::vector<double> f;
  for (auto l : poles(p))
    if (l.imag() > 0) f.push_back(std::abs(l) / (2.0 * kPi));
  std::sort(f.begin(), f.end());
  ASSERT_EQ(f.size(), 3u);
  EXPECT_NEAR(f[0], 520.0, 1e-6);
  EXPECT_NEAR(f[1], 2100.0, 1e-6);
  EXPECT_NEAR(f[2], 5000.0, 1e-6);
}

TEST(Rng, DeterministicAndChannelSeparated) {
  NoiseStream a(42, 0), b(42, 0), c(42, 1);
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const double x = a.normal();
    EXPECT_EQ(x, b.normal());
    differs = differs || x != c.normal();
  }
  EXPECT_TRUE(differs);
}

TEST(Rng, NormalMoments) {
  NoiseStream s(7, 3);
  double sum = 0, sum2 = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double x = s.normal();
    sum += x;
    sum2 += x * x;
  }
  EXPECT_NEAR(sum / n, 0.0, 0.01);
  EXPECT_NEAR(sum2 / n, 1.0, 0.01);
}
