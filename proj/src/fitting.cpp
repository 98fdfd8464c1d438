#include "purephase/fitting.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "purephase/errors.hpp"

namespace purephase {

LmResult levenberg_marquardt(const ResidualFn& residuals, Eigen::VectorXd p0, std::span<const double> steps,
                             const ValidFn& valid, const LmOptions& opt) {
  const auto n = p0.size();
  if (static_cast<std::size_t>(n) != steps.size()) {
    throw FitError{"levenberg_marquardt: one step scale per parameter required"};
  }
  Eigen::VectorXd p = std::move(p0);
  Eigen::VectorXd r = residuals(p);
  if (r.size() < n) {
    throw FitError{"levenberg_marquardt: fewer residuals than parameters"};
  }
  double cost = 0.5 * r.squaredNorm();
  double lambda = 1e-3;
  Eigen::MatrixXd jac(r.size(), n);

  auto scale_of = [&](Eigen::Index i) { return std::max(std::abs(p[i]), steps[static_cast<std::size_t>(i)]); };

  for (int it = 1; it <= opt.max_iterations; ++it) {
    for (Eigen::Index i = 0; i < n; ++i) {
      Eigen::VectorXd q = p;
      const double h = 1e-7 * scale_of(i);
      q[i] += h;
      jac.col(i) = (residuals(q) - r) / h;
    }
    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    const Eigen::VectorXd g = jac.transpose() * r;

    Eigen::VectorXd delta;
    bool accepted = false;
    while (!accepted) {
      Eigen::MatrixXd a = jtj;
      for (Eigen::Index i = 0; i < n; ++i) {
        a(i, i) += lambda * std::max(jtj(i, i), 1e-300);
      }
      delta = a.ldlt().solve(-g);
      const Eigen::VectorXd pn = p + delta;
      if (delta.allFinite() && (!valid || valid(pn))) {
        const Eigen::VectorXd rn = residuals(pn);
        const double cn = 0.5 * rn.squaredNorm();
        if (std::isfinite(cn) && cn <= cost) {
          p = pn;
          r = rn;
          cost = cn;
          lambda = std::max(lambda / 3.0, 1e-12);
          accepted = true;
          break;
        }
      }
      lambda *= 4.0;
      if (lambda > 1e16) {
        // No downhill step exists: p is a stationary point.
        return {p, cost, it, jtj};
      }
    }

    double rel = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      rel = std::max(rel, std::abs(delta[i]) / scale_of(i));
    }
    if (rel < opt.rel_step_tol) {
      Eigen::MatrixXd jtj_final = jac.transpose() * jac;
      return {p, cost, it, jtj_final};
    }
  }
  throw FitError{"least squares did not converge within " + std::to_string(opt.max_iterations) + " iterations"};
}

GaussFit1D fit_gaussian_1d(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw FitError{"fit_gaussian_1d: x and y differ in length"};
  }
  if (x.size() < 5) {
    throw FitError{"fit_gaussian_1d: need at least 5 samples"};
  }
  const std::size_t m = x.size();
  std::vector<double> sorted(y.begin(), y.end());
  std::sort(sorted.begin(), sorted.end());
  const double off0 = sorted[m / 5];
  const auto peak_it = std::max_element(y.begin(), y.end());
  const double amp0 = *peak_it - off0;
  const double yscale = std::max(std::abs(*peak_it), std::abs(sorted.front()));
  if (!(amp0 > 1e-12 * yscale) || !(yscale > 0.0)) {
    throw FitError{"fit_gaussian_1d: profile has no peak"};
  }
  const auto [xmin_it, xmax_it] = std::minmax_element(x.begin(), x.end());
  const double span = *xmax_it - *xmin_it;
  if (!(span > 0.0)) {
    throw FitError{"fit_gaussian_1d: degenerate abscissa"};
  }
  const double spacing = span / static_cast<double>(m - 1);
  const double mean0 = x[static_cast<std::size_t>(peak_it - y.begin())];
  const auto above = std::count_if(y.begin(), y.end(), [&](double v) { return v - off0 > 0.5 * amp0; });
  const double sigma0 = std::max(static_cast<double>(above) * spacing / 2.3548, spacing);

  // Fit in units of the abscissa span and the peak height.
  auto res = [&](const Eigen::VectorXd& p) {
    Eigen::VectorXd r(static_cast<Eigen::Index>(m));
    for (std::size_t k = 0; k < m; ++k) {
      const double u = (x[k] - p[0] * span) / (p[1] * span);
      r[static_cast<Eigen::Index>(k)] = p[3] + p[2] * std::exp(-0.5 * u * u) - y[k] / yscale;
    }
    return r;
  };
  Eigen::VectorXd p0(4);
  p0 << mean0 / span, sigma0 / span, amp0 / yscale, off0 / yscale;
  const double steps[] = {spacing / span, spacing / span, amp0 / yscale, amp0 / yscale};
  const auto lm = levenberg_marquardt(res, p0, steps, [](const Eigen::VectorXd& p) { return p[1] > 0.0; });

  GaussFit1D out;
  out.mean = lm.params[0] * span;
  out.sigma = std::abs(lm.params[1]) * span;
  out.amplitude = lm.params[2] * yscale;
  out.offset = lm.params[3] * yscale;
  out.residual_rms = std::sqrt(2.0 * lm.cost / static_cast<double>(m)) * yscale;
  out.iterations = lm.iterations;
  if (!(out.amplitude > 0.0) || !std::isfinite(out.sigma) || out.sigma <= 0.0) {
    throw FitError{"fit_gaussian_1d: fit collapsed to no peak"};
  }
  return out;
}

MeasurementQuadratic GaussianFit2D::quadratic() const {
  MeasurementQuadratic q;
  q.a = a;
  q.b = b;
  q.c = c;
  return q;
}

TiltAngle GaussianFit2D::tilt() const { return tilt_angle(quadratic()); }

PrincipalWidths GaussianFit2D::widths() const { return principal_widths(quadratic()); }

double GaussianFit2D::model(double x, double y) const {
  const double dx = x - x0;
  const double dy = y - y0;
  return offset + amplitude * std::exp(-(a * dx * dx + 2.0 * b * dx * dy + c * dy * dy));
}

namespace {

// Pixel-unit parameters: amplitude, u0, v0, a, b, c, offset.
using Vec7 = Eigen::Matrix<double, 7, 1>;

double percentile(std::span<const double> v, double frac) {
  std::vector<double> s(v.begin(), v.end());
  const auto k = static_cast<std::size_t>(frac * static_cast<double>(s.size() - 1));
  std::nth_element(s.begin(), s.begin() + static_cast<std::ptrdiff_t>(k), s.end());
  return s[k];
}

GaussianFit2D to_axis_units(const Vec7& p, const Density2D& d) {
  const double p0 = d.axis0().pitch;
  const double p1 = d.axis1().pitch;
  GaussianFit2D f;
  f.amplitude = p[0];
  f.x0 = d.axis0().origin + p0 * p[1];
  f.y0 = d.axis1().origin + p1 * p[2];
  f.a = p[3] / (p0 * p0);
  f.b = p[4] / (p0 * p1);
  f.c = p[5] / (p1 * p1);
  f.offset = p[6];
  return f;
}

Vec7 to_pixel_units(const GaussianFit2D& f, const Density2D& d) {
  const double p0 = d.axis0().pitch;
  const double p1 = d.axis1().pitch;
  Vec7 p;
  p << f.amplitude, (f.x0 - d.axis0().origin) / p0, (f.y0 - d.axis1().origin) / p1, f.a * p0 * p0,
      f.b * p0 * p1, f.c * p1 * p1, f.offset;
  return p;
}

// Mean of s = r^2/2 under weights (e^-s - t) on s < -ln t; the covariance of
// a Gaussian cut at t times its peak shrinks by this factor.
double truncation_factor(double t) {
  if (t <= 0.0) {
    return 1.0;
  }
  const double st = -std::log(t);
  const double mass = 1.0 - t - t * st;
  const double first = 1.0 - t * (1.0 + st) - 0.5 * t * st * st;
  return first / mass;
}

}  // namespace

GaussianFit2D moment_estimate(const Density2D& d) {
  const auto v = d.values();
  const double ped = percentile(v, 0.1);
  const double peak = *std::max_element(v.begin(), v.end()) - ped;
  if (!(peak > 0.0)) {
    throw FitError{"moment_estimate: density has no peak"};
  }
  constexpr double kCut = 0.1;
  const double thr = kCut * peak;
  double w = 0.0, su = 0.0, sv = 0.0;
  for (std::size_t i = 0; i < d.rows(); ++i) {
    for (std::size_t j = 0; j < d.cols(); ++j) {
      const double x = d(i, j) - ped - thr;
      if (x > 0.0) {
        w += x;
        su += x * static_cast<double>(i);
        sv += x * static_cast<double>(j);
      }
    }
  }
  const double mu = su / w;
  const double mv = sv / w;
  double cuu = 0.0, cvv = 0.0, cuv = 0.0;
  for (std::size_t i = 0; i < d.rows(); ++i) {
    for (std::size_t j = 0; j < d.cols(); ++j) {
      const double x = d(i, j) - ped - thr;
      if (x > 0.0) {
        const double du = static_cast<double>(i) - mu;
        const double dv = static_cast<double>(j) - mv;
        cuu += x * du * du;
        cvv += x * dv * dv;
        cuv += x * du * dv;
      }
    }
  }
  const double k = truncation_factor(kCut);
  cuu /= w * k;
  cvv /= w * k;
  cuv /= w * k;
  // Pixel-scale floor keeps a one-pixel-wide ridge invertible.
  cuu += 1.0 / 12.0;
  cvv += 1.0 / 12.0;
  const double det = cuu * cvv - cuv * cuv;
  if (!(det > 0.0)) {
    throw FitError{"moment_estimate: degenerate covariance"};
  }
  Vec7 p;
  p << peak, mu, mv, 0.5 * cvv / det, -0.5 * cuv / det, 0.5 * cuu / det, ped;
  return to_axis_units(p, d);
}

GaussianFit2D fit_gaussian_2d(const Density2D& d, std::optional<GaussianFit2D> init) {
  const GaussianFit2D start = init ? *init : moment_estimate(d);
  const std::size_t rows = d.rows();
  const std::size_t cols = d.cols();
  const auto v = d.values();
  const double vmax = std::max(std::abs(*std::max_element(v.begin(), v.end())),
                               std::abs(*std::min_element(v.begin(), v.end())));
  if (!(vmax > 0.0)) {
    throw FitError{"fit_gaussian_2d: empty density"};
  }

  auto res = [&](const Eigen::VectorXd& p) {
    Eigen::VectorXd r(static_cast<Eigen::Index>(rows * cols));
    for (std::size_t i = 0; i < rows; ++i) {
      const double du = static_cast<double>(i) - p[1];
      for (std::size_t j = 0; j < cols; ++j) {
        const double dv = static_cast<double>(j) - p[2];
        const double e = p[3] * du * du + 2.0 * p[4] * du * dv + p[5] * dv * dv;
        r[static_cast<Eigen::Index>(i * cols + j)] = (p[6] + p[0] * std::exp(-e) - v[i * cols + j]) / vmax;
      }
    }
    return r;
  };
  auto valid = [](const Eigen::VectorXd& p) { return p[3] > 0.0 && p[5] > 0.0 && p[3] * p[5] - p[4] * p[4] > 0.0; };

  const Vec7 p0 = to_pixel_units(start, d);
  if (!valid(p0)) {
    throw FitError{"fit_gaussian_2d: initial quadratic is not positive definite"};
  }
  const double ab = std::abs(p0[3]) + std::abs(p0[5]);
  const double steps[] = {vmax, 1.0, 1.0, ab, ab, ab, vmax};
  const auto lm = levenberg_marquardt(res, Eigen::VectorXd{p0}, steps, valid);

  GaussianFit2D out = to_axis_units(Vec7{lm.params}, d);
  const double m = static_cast<double>(rows * cols);
  out.residual_rms = std::sqrt(2.0 * lm.cost / m) * vmax;
  out.iterations = lm.iterations;
  const double s2 = 2.0 * lm.cost / std::max(m - 7.0, 1.0) * vmax * vmax;
  // Residuals were scaled by 1/vmax, so J^T J carries 1/vmax^2.
  out.param_covariance = s2 / (vmax * vmax) * lm.jtj.inverse();
  if (!(out.amplitude > 0.0)) {
    throw FitError{"fit_gaussian_2d: fitted amplitude is not positive"};
  }
  out.quadratic().validate();
  return out;
}

Density2D fit_residuals(const Density2D& d, const GaussianFit2D& fit) {
  Density2D out = Density2D::zeros(d.axis0(), d.axis1());
  for (std::size_t i = 0; i < d.rows(); ++i) {
    for (std::size_t j = 0; j < d.cols(); ++j) {
      out.at(i, j) = d(i, j) - fit.model(d.axis0().coord(i), d.axis1().coord(j));
    }
  }
  return out;
}

double curve_theta(const CurveModel& m, double meff, double magnification) {
  if (!(meff > 0.0)) {
    throw DomainError{"curve_theta: Meff must be positive"};
  }
  const double s = 1.0 / (meff * meff);
  const auto q = measurement_quadratic({m.phase_plane.A * s, m.phase_plane.B * s}, m.f_m,
                                       -std::abs(magnification), m.wavelength);
  return tilt_angle(q).magnitude();
}

CurveFit fit_magnification_curve(std::span<const TiltPoint> points, const CurveModel& model) {
  if (points.size() < 3) {
    throw FitError{"fit_magnification_curve: need at least 3 points"};
  }
  auto res = [&](const Eigen::VectorXd& p) {
    Eigen::VectorXd r(static_cast<Eigen::Index>(points.size()));
    for (std::size_t k = 0; k < points.size(); ++k) {
      r[static_cast<Eigen::Index>(k)] =
          curve_theta(model, p[0], points[k].magnification) - std::abs(points[k].theta_deg);
    }
    return r;
  };
  // Coarse log scan picks the basin; LM refines.
  double best = 1.0;
  double best_cost = INFINITY;
  for (int k = 0; k <= 400; ++k) {
    const double meff = std::exp(std::log(0.05) + (std::log(20.0) - std::log(0.05)) * k / 400.0);
    Eigen::VectorXd p(1);
    p << meff;
    const double c = res(p).squaredNorm();
    if (c < best_cost) {
      best_cost = c;
      best = meff;
    }
  }
  Eigen::VectorXd p0(1);
  p0 << best;
  const double steps[] = {1e-3};
  const auto lm = levenberg_marquardt(res, p0, steps, [](const Eigen::VectorXd& p) { return p[0] > 0.0; });

  CurveFit out;
  out.meff = lm.params[0];
  const Eigen::VectorXd r = res(lm.params);
  out.residuals_deg.assign(r.data(), r.data() + r.size());
  out.rms_deg = std::sqrt(r.squaredNorm() / static_cast<double>(r.size()));
  return out;
}

}  // namespace purephase
