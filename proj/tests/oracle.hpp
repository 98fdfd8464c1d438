#pragma once

// Brute-force references shared by the tests. Nothing here calls the
// closed-form code it is used to check.

#include <cmath>
#include <complex>
#include <functional>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

using cplx = std::complex<double>;
inline constexpr double kPi = 3.14159265358979323846;

struct Moments {
  double mass = 0.0;
  double mean1 = 0.0, mean2 = 0.0;
  double var1 = 0.0, var2 = 0.0, cov12 = 0.0;
};

/// Midpoint-rule moments of a density on [-h1, h1] x [-h2, h2].
inline Moments moments(const std::function<double(double, double)>& f, double h1, double h2, int n) {
  const double d1 = 2.0 * h1 / n, d2 = 2.0 * h2 / n;
  double s = 0, s1 = 0, s2 = 0, s11 = 0, s22 = 0, s12 = 0;
  for (int i = 0; i < n; ++i) {
    const double x = -h1 + (i + 0.5) * d1;
    for (int j = 0; j < n; ++j) {
      const double y = -h2 + (j + 0.5) * d2;
      const double v = f(x, y);
      s += v;
      s1 += v * x;
      s2 += v * y;
      s11 += v * x * x;
      s22 += v * y * y;
      s12 += v * x * y;
    }
  }
  Moments m;
  m.mass = s * d1 * d2;
  m.mean1 = s1 / s;
  m.mean2 = s2 / s;
  m.var1 = s11 / s - m.mean1 * m.mean1;
  m.var2 = s22 / s - m.mean2 * m.mean2;
  m.cov12 = s12 / s - m.mean1 * m.mean2;
  return m;
}

/// Schmidt number 1 / sum p_i^2 from the singular values of the sampled amplitude.
inline double schmidt_number(const std::function<cplx(double, double)>& psi, double h, int n) {
  Eigen::MatrixXcd a(n, n);
  const double d = 2.0 * h / n;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      a(i, j) = psi(-h + (i + 0.5) * d, -h + (j + 0.5) * d);
    }
  }
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(a);
  const Eigen::VectorXd s = svd.singularValues();
  const double tot = s.squaredNorm();
  double p2 = 0.0;
  for (int i = 0; i < s.size(); ++i) {
    const double p = s(i) * s(i) / tot;
    p2 += p * p;
  }
  return 1.0 / p2;
}

/// Direct O(n^2) quadrature of (1/sqrt(2 pi)) int f(x) e^{-i q x} dx.
inline cplx fourier_point(const std::function<cplx(double)>& f, double q, double h, int n) {
  const double d = 2.0 * h / n;
  cplx s = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = -h + (i + 0.5) * d;
    s += f(x) * std::exp(cplx{0.0, -q * x});
  }
  return s * d / std::sqrt(2.0 * kPi);
}

/// Angle of the covariance [[v1, c], [c, v2]] eigenvector for the smallest
/// eigenvalue (the minor axis), in degrees reduced to (-90, 90].
inline double minor_axis_deg(double v1, double v2, double c) {
  Eigen::Matrix2d m;
  m << v1, c, c, v2;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(m);
  const Eigen::Vector2d e = es.eigenvectors().col(0);
  double deg = std::atan2(e(1), e(0)) * 180.0 / kPi;
  while (deg <= -90.0) deg += 180.0;
  while (deg > 90.0) deg -= 180.0;
  return deg;
}

/// Reproducible stream for property tests.
inline std::mt19937_64& rng() {
  static std::mt19937_64 g{20241014};
  return g;
}
inline double uniform(double lo, double hi) { return std::uniform_real_distribution<double>{lo, hi}(rng()); }
inline double log_uniform(double lo, double hi) { return std::exp(uniform(std::log(lo), std::log(hi))); }

}  // namespace oracle
