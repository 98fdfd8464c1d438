#pragma once

// Least-squares Gaussian models: 1D profiles, the tilted 2D Gaussian and the
// one-parameter magnification fit of a tilt curve.

#include <array>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "purephase/density.hpp"
#include "purephase/optics.hpp"

namespace purephase {

struct LmOptions {
  int max_iterations = 200;
  double rel_step_tol = 1e-8;
};

struct LmResult {
  Eigen::VectorXd params;
  double cost = 0.0;  // half the residual sum of squares
  int iterations = 0;
  Eigen::MatrixXd jtj;
};

using ResidualFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
/// Returns false for parameters outside the model's domain.
using ValidFn = std::function<bool(const Eigen::VectorXd&)>;

/// Levenberg-Marquardt with forward-difference Jacobians. Throws FitError
/// when the iteration budget runs out before the relative step falls below
/// tolerance.
LmResult levenberg_marquardt(const ResidualFn& residuals, Eigen::VectorXd p0, std::span<const double> steps,
                             const ValidFn& valid = {}, const LmOptions& opt = {});

struct GaussFit1D {
  double mean = 0.0;
  double sigma = 0.0;
  double amplitude = 0.0;
  double offset = 0.0;
  double residual_rms = 0.0;
  int iterations = 0;
};

/// y = offset + amplitude exp(-(x - mean)^2 / (2 sigma^2)).
GaussFit1D fit_gaussian_1d(std::span<const double> x, std::span<const double> y);

struct GaussianFit2D {
  double amplitude = 0.0;
  double x0 = 0.0;  // axis0 coordinate of the center
  double y0 = 0.0;  // axis1 coordinate
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
  double offset = 0.0;
  double residual_rms = 0.0;
  int iterations = 0;
  /// Covariance of (amplitude, x0, y0, a, b, c, offset) in the fit's pixel units.
  Eigen::Matrix<double, 7, 7> param_covariance = Eigen::Matrix<double, 7, 7>::Zero();

  MeasurementQuadratic quadratic() const;
  TiltAngle tilt() const;
  PrincipalWidths widths() const;
  double model(double x, double y) const;
};

/// Moment estimate from the positive part above a low-percentile pedestal.
GaussianFit2D moment_estimate(const Density2D& d);

/// offset + amplitude exp(-(a dx^2 + 2 b dx dy + c dy^2)), fitted in pixel
/// units and reported in axis units.
GaussianFit2D fit_gaussian_2d(const Density2D& d, std::optional<GaussianFit2D> init = std::nullopt);

/// Data minus model on the same axes.
Density2D fit_residuals(const Density2D& d, const GaussianFit2D& fit);

struct CurveModel {
  PurePhaseParams phase_plane;  // unscaled coefficients at the phase plane
  double f_m = 0.0;
  double wavelength = 0.0;
};

/// |theta| predicted for |M_m| with Meff as the free parameter; real imaging
/// is taken as inverting, so the model evaluates at M_m = -|M_m|.
double curve_theta(const CurveModel& m, double meff, double magnification);

struct CurveFit {
  double meff = 0.0;
  double rms_deg = 0.0;
  std::vector<double> residuals_deg;
};

/// Needs at least three points; compares |theta| against |theta| of the model.
CurveFit fit_magnification_curve(std::span<const TiltPoint> points, const CurveModel& model);

}  // namespace purephase
