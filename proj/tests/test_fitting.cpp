#include <doctest.h>

#include <cmath>
#include <random>

#include "oracle.hpp"
#include "purephase/errors.hpp"
#include "purephase/fitting.hpp"
#include "purephase/frames.hpp"
#include "purephase/optics.hpp"

using namespace purephase;

namespace {

const DGParams kReference{286.0, 13.0};
constexpr double kLambda = 0.81;
constexpr double kFm = 1.5e5;

PrepDesign reference_design() { return PrepDesign::make(1e5, 1.5e5, 1.25e5, phase_plane_distance(kReference, kLambda)); }

MeasurementQuadratic reference_q(double mm) {
  return measurement_quadratic(p3_scaled_params(kReference, reference_design()), kFm, mm, kLambda);
}

Density2D sampled(const MeasurementQuadratic& q, std::size_t n, double pitch, double scale = 1.0) {
  const auto a0 = Axis::centered("x_k", n, pitch);
  const auto a1 = Axis::centered("x_p", n, pitch);
  auto d = Density2D::zeros(a0, a1);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) d.at(i, j) = scale * q.density(a0.coord(i), a1.coord(j));
  }
  return d;
}

CurveModel reference_model() { return CurveModel{phase_plane_params(kReference), kFm, kLambda}; }

}  // namespace

TEST_CASE("1D Gaussian: exact recovery, noise and degenerate input") {
  std::vector<double> x(81), y(81);
  for (std::size_t k = 0; k < x.size(); ++k) {
    x[k] = -40.0 + k;
    y[k] = 0.3 + 5.0 * std::exp(-0.5 * std::pow((x[k] - 2.5) / 6.0, 2));
  }
  const auto f = fit_gaussian_1d(x, y);
  CHECK(f.mean == doctest::Approx(2.5).epsilon(1e-6));
  CHECK(f.sigma == doctest::Approx(6.0).epsilon(1e-6));
  CHECK(f.amplitude == doctest::Approx(5.0).epsilon(1e-6));
  CHECK(f.offset == doctest::Approx(0.3).epsilon(1e-6));

  // SNR 10: noise standard deviation one tenth of the peak.
  auto& g = oracle::rng();
  std::normal_distribution<double> noise{0.0, 0.5};
  int within = 0;
  for (int trial = 0; trial < 20; ++trial) {
    auto yn = y;
    for (auto& v : yn) v += noise(g);
    within += std::abs(fit_gaussian_1d(x, yn).sigma / 6.0 - 1.0) < 0.05 ? 1 : 0;
  }
  CHECK(within >= 18);

  const std::vector<double> flat(x.size(), 1.0);
  CHECK_THROWS_AS(fit_gaussian_1d(x, flat), FitError);
  CHECK_THROWS_AS(fit_gaussian_1d(std::span<const double>{x}.first(4), std::span<const double>{y}.first(4)),
                  FitError);
}

TEST_CASE("Levenberg-Marquardt on an exponential decay") {
  std::vector<double> t(30), y(30);
  for (std::size_t k = 0; k < t.size(); ++k) {
    t[k] = 0.2 * k;
    y[k] = 3.0 * std::exp(-1.7 * t[k]);
  }
  const ResidualFn r = [&](const Eigen::VectorXd& p) {
    Eigen::VectorXd out(t.size());
    for (std::size_t k = 0; k < t.size(); ++k) out[k] = p[0] * std::exp(-p[1] * t[k]) - y[k];
    return out;
  };
  const std::vector<double> steps{1e-6, 1e-6};
  const auto res = levenberg_marquardt(r, Eigen::Vector2d{1.0, 0.5}, steps);
  CHECK(res.params[0] == doctest::Approx(3.0).epsilon(1e-6));
  CHECK(res.params[1] == doctest::Approx(1.7).epsilon(1e-6));
  CHECK(res.cost < 1e-12);
  CHECK_THROWS_AS(levenberg_marquardt(r, Eigen::Vector2d{1.0, 0.5}, std::vector<double>{1e-6}), FitError);
}

TEST_CASE("property: 2D fit recovers the quadratic across the sweep") {
  for (double mm = -3.0; mm <= -0.3 + 1e-9; mm += 0.3) {
    const auto q = reference_q(mm);
    const auto d = sampled(q, 256, auto_pitch(q.covariance(), 256));
    const auto fit = fit_gaussian_2d(d);
    const auto got = fit.quadratic();
    INFO("M = " << mm);
    CHECK(got.a == doctest::Approx(q.a).epsilon(0.01));
    CHECK(got.b == doctest::Approx(q.b).epsilon(0.01));
    CHECK(got.c == doctest::Approx(q.c).epsilon(0.01));
    const double truth = oracle::minor_axis_deg(q.covariance().var1, q.covariance().var2, q.covariance().cov12);
    CHECK(std::abs(fit.tilt().degrees - truth) < 0.5);
    CHECK(std::abs(moment_estimate(d).tilt().degrees - truth) < 3.0);
    CHECK(fit.residual_rms < 1e-6 * fit.amplitude);
  }
}

TEST_CASE("fit at the operating point and invariance to scale and offset") {
  const auto q = reference_q(-0.5);
  const double pitch = auto_pitch(q.covariance(), 128);
  const auto d = sampled(q, 128, pitch);
  const auto fit = fit_gaussian_2d(d);
  CHECK(std::abs(fit.tilt().degrees) > 66.0);
  CHECK(std::abs(fit.tilt().degrees) < 74.0);
  const auto big = fit_gaussian_2d(sampled(q, 128, pitch, 1e3));
  CHECK(big.tilt().degrees == doctest::Approx(fit.tilt().degrees).epsilon(1e-6));
  CHECK(big.amplitude == doctest::Approx(1e3 * fit.amplitude).epsilon(1e-6));

  auto pedestal = d;
  for (auto& v : pedestal.values()) v += 0.02 * fit.amplitude;
  const auto fp = fit_gaussian_2d(pedestal);
  CHECK(fp.offset == doctest::Approx(0.02 * fit.amplitude).epsilon(1e-3));
  CHECK(fp.tilt().degrees == doctest::Approx(fit.tilt().degrees).epsilon(1e-4));

  const auto res = fit_residuals(d, fit);
  double worst = 0.0;
  for (double v : res.values()) worst = std::max(worst, std::abs(v));
  CHECK(worst < 1e-6 * fit.amplitude);
  CHECK_THROWS_AS(fit_gaussian_2d(Density2D::zeros(d.axis0(), d.axis1())), FitError);
}

TEST_CASE("magnification curve: recovery, noise and too few points") {
  const auto model = reference_model();
  const std::vector<double> mags{0.5, 0.75, 1.0, 1.25, 1.5, 2.0, 2.5, 3.0};
  std::vector<TiltPoint> pts;
  for (double m : mags) pts.push_back({m, curve_theta(model, 1.39, m)});
  const auto fit = fit_magnification_curve(pts, model);
  CHECK(fit.meff == doctest::Approx(1.39).epsilon(0.01));
  CHECK(fit.rms_deg < 1e-6);
  REQUIRE(fit.residuals_deg.size() == mags.size());

  // The curve model is the measurement quadratic of the scaled state.
  const auto d = reference_design();
  for (double m : mags) {
    const double direct = std::abs(tilt_angle(reference_q(-m)).degrees);
    CHECK(curve_theta(model, d.meff(), m) == doctest::Approx(direct).epsilon(1e-9));
  }

  auto& g = oracle::rng();
  std::normal_distribution<double> noise{0.0, 2.0};
  auto noisy = pts;
  for (auto& p : noisy) p.theta_deg += noise(g);
  const auto nf = fit_magnification_curve(noisy, model);
  CHECK(nf.meff > 1.2);
  CHECK(nf.meff < 1.5);

  CHECK_THROWS_AS(fit_magnification_curve(std::span<const TiltPoint>{pts}.first(1), model), FitError);
  CHECK_THROWS_AS(curve_theta(model, 0.0, 1.0), DomainError);
}
