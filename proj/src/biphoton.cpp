#include "purephase/biphoton.hpp"

#include <cmath>
#include <string>

#include "purephase/errors.hpp"

namespace purephase {

namespace {

void require_positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw DomainError{std::string{name} + " must be positive and finite (got " + std::to_string(v) + ")"};
  }
}

void require_non_negative(double v, const char* name) {
  if (!(v >= 0.0) || !std::isfinite(v)) {
    throw DomainError{std::string{name} + " must be non-negative and finite (got " + std::to_string(v) +
                      ")"};
  }
}

}  // namespace

void DGParams::validate() const {
  require_positive(sigma_plus, "sigma_plus");
  require_positive(sigma_minus, "sigma_minus");
}

GaussianBiphotonState::GaussianBiphotonState(cplx m11, cplx m22, cplx m12, double wavelength, cplx log_norm)
    : m_{m11, m22, m12}, log_norm_{log_norm}, wavelength_{wavelength} {
  require_positive(wavelength, "wavelength");
  const double w11 = m11.real();
  const double w22 = m22.real();
  const double w12 = m12.real();
  if (!(w11 > 0.0) || !(w22 > 0.0) || !(w11 * w22 - w12 * w12 > 0.0)) {
    throw DomainError{"state is not normalizable: Re(M) must be positive definite"};
  }
}

GaussianBiphotonState GaussianBiphotonState::normalized(cplx m11, cplx m22, cplx m12, double wavelength) {
  GaussianBiphotonState s{m11, m22, m12, wavelength, cplx{0.0, 0.0}};
  return s.renormalized();
}

cplx GaussianBiphotonState::diagonal(Photon p) const {
  if (p == Photon::both) {
    throw DomainError{"diagonal: photon must be first or second"};
  }
  return p == Photon::first ? m_[0] : m_[1];
}

cplx GaussianBiphotonState::amplitude(double x1, double x2) const {
  return std::exp(log_norm_ - (m_[0] * x1 * x1 + m_[1] * x2 * x2 + 2.0 * m_[2] * x1 * x2));
}

std::array<double, 3> GaussianBiphotonState::intensity_precision() const {
  return {2.0 * m_[0].real(), 2.0 * m_[1].real(), 2.0 * m_[2].real()};
}

double GaussianBiphotonState::norm() const {
  const auto w = intensity_precision();
  const double det = w[0] * w[1] - w[2] * w[2];
  return std::exp(2.0 * log_norm_.real()) * kPi / std::sqrt(det);
}

GaussianBiphotonState GaussianBiphotonState::renormalized() const {
  const auto w = intensity_precision();
  const double det = w[0] * w[1] - w[2] * w[2];
  const double re = 0.25 * std::log(det) - 0.5 * std::log(kPi);
  return with_log_norm(cplx{re, log_norm_.imag()});
}

GaussianBiphotonState GaussianBiphotonState::with_log_norm(cplx log_norm) const {
  return GaussianBiphotonState{m_[0], m_[1], m_[2], wavelength_, log_norm};
}

bool GaussianBiphotonState::exchange_symmetric(double rel_tol) const {
  return std::abs(m_[0] - m_[1]) <= rel_tol * std::abs(m_[0]);
}

Bivariate GaussianBiphotonState::intensity_covariance() const {
  const auto w = intensity_precision();
  const double det = w[0] * w[1] - w[2] * w[2];
  Bivariate b;
  b.var1 = w[1] / (2.0 * det);
  b.var2 = w[0] / (2.0 * det);
  b.cov12 = -w[2] / (2.0 * det);
  return b;
}

Bivariate momentum_covariance(const GaussianBiphotonState& state) {
  // psi~(q) ~ exp(-q^T M^-1 q / 4), so |psi~|^2 has precision Re(M^-1) / 2.
  const cplx det = state.m11() * state.m22() - state.m12() * state.m12();
  const double r11 = (state.m22() / det).real();
  const double r22 = (state.m11() / det).real();
  const double r12 = (-state.m12() / det).real();
  const double rdet = r11 * r22 - r12 * r12;
  if (!(r11 > 0.0) || !(rdet > 0.0)) {
    throw DomainError{"momentum_covariance: momentum intensity is not normalizable"};
  }
  Bivariate b;
  b.var1 = r22 / rdet;
  b.var2 = r11 / rdet;
  b.cov12 = -r12 / rdet;
  return b;
}

GaussianBiphotonState dg_state(const DGParams& p, double wavelength) {
  p.validate();
  const double inv_plus = 1.0 / (4.0 * p.sigma_plus * p.sigma_plus);
  const double inv_minus = 1.0 / (4.0 * p.sigma_minus * p.sigma_minus);
  const cplx diag{inv_minus + inv_plus, 0.0};
  const cplx cross{inv_plus - inv_minus, 0.0};
  return GaussianBiphotonState::normalized(diag, diag, cross, wavelength);
}

GaussianBiphotonState pure_phase_state(const PurePhaseParams& p, double wavelength) {
  require_positive(p.A, "A");
  if (!std::isfinite(p.B)) {
    throw DomainError{"B must be finite"};
  }
  return GaussianBiphotonState::normalized(cplx{p.A, 0.0}, cplx{p.A, 0.0}, cplx{0.0, 0.5 * p.B}, wavelength);
}

double sigma_minus_from_crystal(double crystal_length, double pump_wavelength, double pump_index) {
  require_non_negative(crystal_length, "crystal_length");
  require_positive(pump_wavelength, "pump_wavelength");
  require_positive(pump_index, "pump_index");
  return std::sqrt(crystal_length * pump_wavelength / (6.0 * kPi * pump_index));
}

PurePhaseParams pure_phase_params(const DGParams& p) {
  p.validate();
  const double sp2 = p.sigma_plus * p.sigma_plus;
  const double sm2 = p.sigma_minus * p.sigma_minus;
  return {1.0 / (4.0 * (sp2 + sm2)), (sp2 - sm2) / (2.0 * p.sigma_plus * p.sigma_minus * (sp2 + sm2))};
}

PurePhaseParams phase_plane_params(const DGParams& p) {
  PurePhaseParams out = pure_phase_params(p);
  out.A *= 2.0;
  return out;
}

MomentumParams momentum_params(const PurePhaseParams& p) {
  require_positive(p.A, "A");
  const double d = 4.0 * p.A * p.A + p.B * p.B;
  return {p.A / d, p.B / d};
}

PurePhaseParams position_params(const MomentumParams& p) {
  const MomentumParams back = momentum_params(PurePhaseParams{p.Abar, p.Bbar});
  return {back.Abar, back.Bbar};
}

double phase_plane_distance(const DGParams& p, double wavelength) {
  require_non_negative(p.sigma_plus, "sigma_plus");
  require_non_negative(p.sigma_minus, "sigma_minus");
  require_positive(wavelength, "wavelength");
  return 2.0 * kPi * p.sigma_plus * p.sigma_minus / wavelength;
}

double schmidt_number(const DGParams& p) {
  p.validate();
  const double r = p.sigma_plus / p.sigma_minus;
  const double s = r + 1.0 / r;
  return 0.25 * s * s;
}

double conditional_width(const GaussianBiphotonState& state) {
  const auto w = state.intensity_precision();
  return 1.0 / std::sqrt(2.0 * w[0]);
}

double marginal_width(const GaussianBiphotonState& state) {
  return std::sqrt(state.intensity_covariance().var1);
}

double fedorov_ratio(const GaussianBiphotonState& state) {
  const auto w = state.intensity_precision();
  const double det = w[0] * w[1] - w[2] * w[2];
  if (!(w[0] > 0.0) || !(det > 0.0)) {
    throw DomainError{"fedorov_ratio: degenerate intensity precision matrix"};
  }
  // sigma_x1^2 / sigma_x1|x2^2 = W11 W22 / det
  return std::sqrt(w[0] * w[1] / det);
}

ConditionalMoments conditional_momentum(const PurePhaseParams& p, double x) {
  require_positive(p.A, "A");
  return {-p.B * x, std::sqrt(p.A)};
}

double marginal_momentum_width(const PurePhaseParams& p) {
  require_positive(p.A, "A");
  return std::sqrt(p.A + p.B * p.B / (4.0 * p.A));
}

double birth_zone_number(const DGParams& p) {
  p.validate();
  return p.sigma_plus / p.sigma_minus;
}

}  // namespace purephase
