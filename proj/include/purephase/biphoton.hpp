#pragma once

// Exact algebra of Gaussian two-photon transverse states.
//
// A state is psi(x1, x2) = exp(logNorm - (m11 x1^2 + m22 x2^2 + 2 m12 x1 x2))
// with complex coefficients in um^-2. Momenta are transverse spatial
// frequencies q (rad/um); the detector coordinate behind a Fourier lens of
// focal length f is x = lambda f q / (2 pi).

#include <array>
#include <complex>

namespace purephase {

using cplx = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;

enum class Photon { first, second, both };

/// Double-Gaussian source parameters (um).
struct DGParams {
  double sigma_plus = 0.0;
  double sigma_minus = 0.0;

  void validate() const;
};

/// Coefficients of the pure phase state exp(-A (x1^2 + x2^2) - i B x1 x2).
struct PurePhaseParams {
  double A = 0.0;  // um^-2
  double B = 0.0;  // um^-2
};

/// Momentum-space coefficients (um^2): exp(-Abar (q1^2 + q2^2) + i Bbar q1 q2).
struct MomentumParams {
  double Abar = 0.0;
  double Bbar = 0.0;
};

/// Mean and covariance of a bivariate Gaussian intensity.
struct Bivariate {
  std::array<double, 2> mean{0.0, 0.0};
  double var1 = 0.0;
  double var2 = 0.0;
  double cov12 = 0.0;
};

class GaussianBiphotonState {
 public:
  GaussianBiphotonState(cplx m11, cplx m22, cplx m12, double wavelength, cplx log_norm);

  /// Builds the state and sets Re(logNorm) so that the total probability is 1.
  static GaussianBiphotonState normalized(cplx m11, cplx m22, cplx m12, double wavelength);

  cplx m11() const { return m_[0]; }
  cplx m22() const { return m_[1]; }
  cplx m12() const { return m_[2]; }
  /// Diagonal coefficient of the given photon (first or second).
  cplx diagonal(Photon p) const;
  cplx log_norm() const { return log_norm_; }
  double wavelength() const { return wavelength_; }
  double wavenumber() const { return 2.0 * kPi / wavelength_; }

  cplx amplitude(double x1, double x2) const;
  double intensity(double x1, double x2) const { return std::norm(amplitude(x1, x2)); }

  /// Closed-form integral of |psi|^2 over the plane.
  double norm() const;
  GaussianBiphotonState renormalized() const;

  /// Same coefficients with the given log amplitude.
  GaussianBiphotonState with_log_norm(cplx log_norm) const;

  /// m11 == m22 to within rel_tol of |m11|.
  bool exchange_symmetric(double rel_tol = 0.0) const;

  /// Precision matrix W = 2 Re(M) of |psi|^2 = exp(-x^T W x): {W11, W22, W12}.
  std::array<double, 3> intensity_precision() const;
  /// Covariance (2W)^-1 of |psi|^2.
  Bivariate intensity_covariance() const;

 private:
  std::array<cplx, 3> m_;
  cplx log_norm_;
  double wavelength_;
};

/// Covariance of the momentum-space intensity |psi~(q1, q2)|^2, i.e. (Re M^-1)^-1.
Bivariate momentum_covariance(const GaussianBiphotonState& state);

/// Double-Gaussian source state, normalized.
GaussianBiphotonState dg_state(const DGParams& p, double wavelength);

/// psi = sqrt(2A/pi) exp(-A (x1^2 + x2^2) - i B x1 x2).
GaussianBiphotonState pure_phase_state(const PurePhaseParams& p, double wavelength);

/// sigma_- = sqrt(L lambda_p / (6 pi n_p)).
double sigma_minus_from_crystal(double crystal_length, double pump_wavelength, double pump_index);

/// A = 1/(4(s+^2 + s-^2)), B = (s+^2 - s-^2)/(2 s+ s- (s+^2 + s-^2)); the nominal closed form.
PurePhaseParams pure_phase_params(const DGParams& p);

/// The coefficients that exact propagation of the DG state to z_p actually
/// produces once the uncorrelated quadratic phase is removed: same B, and
/// A = 1/(2(s+^2 + s-^2)), twice the nominal value of pure_phase_params.
PurePhaseParams phase_plane_params(const DGParams& p);

MomentumParams momentum_params(const PurePhaseParams& p);
/// Inverse of momentum_params (the map is an involution).
PurePhaseParams position_params(const MomentumParams& p);

/// z_p = 2 pi s+ s- / lambda.
double phase_plane_distance(const DGParams& p, double wavelength);

double schmidt_number(const DGParams& p);

/// sigma_x1 / sigma_x1|x2 from the intensity precision matrix.
double fedorov_ratio(const GaussianBiphotonState& state);

/// Marginal and conditional position std of photon 1.
double marginal_width(const GaussianBiphotonState& state);
double conditional_width(const GaussianBiphotonState& state);

struct ConditionalMoments {
  double mean = 0.0;
  double stddev = 0.0;
};

/// q1 given x2 = x for the pure phase state: mean -B x, std sqrt(A).
ConditionalMoments conditional_momentum(const PurePhaseParams& p, double x);

/// sqrt(A + B^2 / 4A).
double marginal_momentum_width(const PurePhaseParams& p);

/// N = s+ / s-.
double birth_zone_number(const DGParams& p);

}  // namespace purephase
