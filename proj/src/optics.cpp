#include "purephase/optics.hpp"

#include <cmath>
#include <string>

#include "purephase/errors.hpp"

namespace purephase {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

int index_of(Photon p) { return p == Photon::first ? 0 : 1; }

struct Coeffs {
  cplx tt, yy, ty;
};

Coeffs split(const GaussianBiphotonState& s, int t) {
  return t == 0 ? Coeffs{s.m11(), s.m22(), s.m12()} : Coeffs{s.m22(), s.m11(), s.m12()};
}

GaussianBiphotonState join(const GaussianBiphotonState& s, int t, Coeffs c, cplx log_norm) {
  if (t == 0) {
    return GaussianBiphotonState{c.tt, c.yy, c.ty, s.wavelength(), log_norm};
  }
  return GaussianBiphotonState{c.yy, c.tt, c.ty, s.wavelength(), log_norm};
}

// Integrates the target variable against exp(log_pref - (alpha u^2 + 2 beta u x + gamma x^2)),
// leaving u in its place.
GaussianBiphotonState gaussian_transform(const GaussianBiphotonState& s, int t, cplx alpha, cplx beta,
                                         cplx gamma, cplx log_pref) {
  const Coeffs m = split(s, t);
  const cplx p = m.tt + gamma;
  if (!(p.real() > 0.0)) {
    throw DomainError{"transform integral diverges: Re(P) <= 0"};
  }
  Coeffs out;
  out.tt = alpha - beta * beta / p;
  out.ty = -beta * m.ty / p;
  out.yy = m.yy - m.ty * m.ty / p;
  const cplx log_norm = s.log_norm() + 0.5 * std::log(kPi / p) + log_pref;
  return join(s, t, out, log_norm);
}

GaussianBiphotonState quadratic_phase(const GaussianBiphotonState& s, int t, double c) {
  Coeffs m = split(s, t);
  m.tt += cplx{0.0, kPi * c / s.wavelength()};
  return join(s, t, m, s.log_norm());
}

GaussianBiphotonState scale(const GaussianBiphotonState& s, int t, double k) {
  Coeffs m = split(s, t);
  m.tt *= k * k;
  m.ty *= k;
  return join(s, t, m, s.log_norm() + 0.5 * std::log(std::abs(k)));
}

GaussianBiphotonState fresnel(const GaussianBiphotonState& s, int t, double z) {
  if (z == 0.0) {
    return s;
  }
  const cplx h{0.0, s.wavenumber() / (2.0 * z)};
  const cplx log_pref = -0.5 * std::log(cplx{0.0, s.wavelength() * z});
  return gaussian_transform(s, t, -h, h, -h, log_pref);
}

GaussianBiphotonState fourier(const GaussianBiphotonState& s, int t, double kappa, cplx log_pref) {
  return gaussian_transform(s, t, cplx{0.0, 0.0}, cplx{0.0, 0.5 * kappa}, cplx{0.0, 0.0}, log_pref);
}

GaussianBiphotonState apply_single(const GaussianBiphotonState& s, const ElementKind& kind, int t) {
  return std::visit(
      Overloaded{
          [&](const QuadraticPhase& e) { return quadratic_phase(s, t, e.c); },
          [&](const Scale& e) { return scale(s, t, e.s); },
          [&](const Fresnel& e) { return fresnel(s, t, e.z); },
          [&](const ThinLens& e) { return quadratic_phase(s, t, 1.0 / e.f); },
          [&](const LensImaging& e) {
            const auto phased = quadratic_phase(s, t, 1.0 / (e.f - e.u));
            return scale(phased, t, 1.0 - e.u / e.f);
          },
          [&](const FourierLens& e) {
            const double lf = s.wavelength() * e.f_m;
            return fourier(s, t, 2.0 * kPi / lf, -0.5 * std::log(cplx{0.0, lf}));
          },
      },
      kind);
}

void require(bool ok, const std::string& msg) {
  if (!ok) {
    throw DomainError{msg};
  }
}

}  // namespace

void OpticalElement::validate() const {
  std::visit(Overloaded{
                 [](const QuadraticPhase& e) { require(std::isfinite(e.c), "QuadraticPhase: c must be finite"); },
                 [](const Scale& e) { require(std::isfinite(e.s) && e.s != 0.0, "Scale: s must be non-zero"); },
                 [](const Fresnel& e) { require(std::isfinite(e.z), "Fresnel: z must be finite"); },
                 [](const ThinLens& e) { require(std::isfinite(e.f) && e.f != 0.0, "ThinLens: f must be non-zero"); },
                 [](const LensImaging& e) {
                   require(std::isfinite(e.f) && e.f != 0.0, "LensImaging: f must be non-zero");
                   require(std::isfinite(e.u) && e.u != e.f, "LensImaging: u must differ from f");
                 },
                 [](const FourierLens& e) { require(e.f_m > 0.0 && std::isfinite(e.f_m), "FourierLens: f_m must be positive"); },
             },
             kind);
}

GaussianBiphotonState apply_element(const GaussianBiphotonState& state, const OpticalElement& e) {
  e.validate();
  if (e.target == Photon::both) {
    return apply_single(apply_single(state, e.kind, 0), e.kind, 1);
  }
  return apply_single(state, e.kind, index_of(e.target));
}

GaussianBiphotonState apply_chain(GaussianBiphotonState state, std::span<const OpticalElement> chain) {
  for (const auto& e : chain) {
    state = apply_element(state, e);
  }
  return state;
}

GaussianBiphotonState partial_fourier(const GaussianBiphotonState& state, Photon target) {
  if (target == Photon::both) {
    return partial_fourier(partial_fourier(state, Photon::first), Photon::second);
  }
  return fourier(state, index_of(target), 1.0, cplx{-0.5 * std::log(2.0 * kPi), 0.0});
}

PrepDesign PrepDesign::make(double f, double f2, double f3, double z_p) {
  if (!(f > 0.0) || !(f2 > 0.0) || !(f3 > 0.0)) {
    throw DesignError{"focal lengths f, f2, f3 must be positive"};
  }
  if (!(z_p > 0.0) || !std::isfinite(z_p)) {
    throw DesignError{"phase plane distance z_p must be positive"};
  }
  PrepDesign d{f, f2, f3, z_p};
  if (!(d.u() > 0.0 && d.u() < f)) {
    throw DesignError{"not virtual imaging: need 0 < u = f - 2 z_p < f (u = " + std::to_string(d.u()) + " um)"};
  }
  if (!(f2 > std::abs(d.v()))) {
    throw DesignError{"no real image: need f2 > |v| (f2 = " + std::to_string(f2) +
                      " um, |v| = " + std::to_string(std::abs(d.v())) + " um)"};
  }
  if (!(d.meff() > 0.0)) {
    throw DesignError{"effective magnification must be positive"};
  }
  return d;
}

std::vector<OpticalElement> p3_chain(const PrepDesign& d) {
  return {
      OpticalElement{Fresnel{d.z_p()}, Photon::both},
      OpticalElement{LensImaging{d.u(), d.f()}, Photon::both},
      OpticalElement{Scale{-1.0 / d.m4f()}, Photon::both},
  };
}

GaussianBiphotonState prepare_p3(const DGParams& p, double wavelength, const PrepDesign& d) {
  const double zp = phase_plane_distance(p, wavelength);
  if (std::abs(d.z_p() - zp) > 1e-9 * zp) {
    throw DesignError{"design z_p does not match the source phase plane distance " + std::to_string(zp) + " um"};
  }
  const auto chain = p3_chain(d);
  auto out = apply_chain(dg_state(p, wavelength), chain);
  if (!out.exchange_symmetric(1e-12)) {
    throw DomainError{"prepare_p3: exchange symmetry lost"};
  }
  return out;
}

GaussianBiphotonState expected_p3_state(const DGParams& p, double wavelength, const PrepDesign& d) {
  const auto pure = pure_phase_state(phase_plane_params(p), wavelength);
  return apply_element(pure, OpticalElement{Scale{-1.0 / d.meff()}, Photon::both});
}

PurePhaseParams pure_phase_form(const GaussianBiphotonState& s, double rel_tol) {
  const double ref = std::abs(s.m11());
  const bool ok = std::abs(s.m11() - s.m22()) <= rel_tol * ref && std::abs(s.m11().imag()) <= rel_tol * ref &&
                  std::abs(s.m12().real()) <= rel_tol * ref;
  if (!ok) {
    throw DomainError{"state is not of pure phase form"};
  }
  return {s.m11().real(), 2.0 * s.m12().imag()};
}

void MeasurementQuadratic::validate() const {
  if (!(a > 0.0) || !(c > 0.0) || !(a * c - b * b > 0.0)) {
    throw DomainError{"measurement quadratic is not positive definite"};
  }
}

double MeasurementQuadratic::density(double xk, double xp) const {
  const double det = a * c - b * b;
  return std::sqrt(det) / kPi * std::exp(-(a * xk * xk + 2.0 * b * xk * xp + c * xp * xp));
}

Bivariate MeasurementQuadratic::covariance() const {
  const double det = a * c - b * b;
  Bivariate out;
  out.var1 = c / (2.0 * det);
  out.var2 = a / (2.0 * det);
  out.cov12 = -b / (2.0 * det);
  return out;
}

MeasurementQuadratic measurement_quadratic(const PurePhaseParams& scaled, double f_m, double m_m,
                                           double wavelength) {
  if (!(scaled.A > 0.0)) {
    throw DomainError{"measurement_quadratic: A' must be positive"};
  }
  if (!(f_m > 0.0)) {
    throw DomainError{"measurement_quadratic: f_m must be positive"};
  }
  if (m_m == 0.0 || !std::isfinite(m_m)) {
    throw DomainError{"measurement_quadratic: M_m must be non-zero"};
  }
  if (!(wavelength > 0.0)) {
    throw DomainError{"measurement_quadratic: wavelength must be positive"};
  }
  const double ap = scaled.A;
  const double bp = scaled.B;
  const double lf = wavelength * f_m;
  MeasurementQuadratic q;
  q.a = 2.0 * kPi * kPi / (lf * lf * ap);
  q.b = kPi * bp / (lf * m_m * ap);
  q.c = 2.0 * ap / (m_m * m_m) + bp * bp / (2.0 * m_m * m_m * ap);
  q.a_prime = ap;
  q.b_prime = bp;
  q.validate();
  return q;
}

MeasurementQuadratic measure_state(const GaussianBiphotonState& state, double f_m, double m_m) {
  if (m_m == 0.0 || !std::isfinite(m_m)) {
    throw DomainError{"measure_state: M_m must be non-zero"};
  }
  const OpticalElement chain[] = {
      OpticalElement{FourierLens{f_m}, Photon::first},
      OpticalElement{Scale{1.0 / m_m}, Photon::second},
  };
  const auto out = apply_chain(state, chain);
  const auto w = out.intensity_precision();
  MeasurementQuadratic q;
  q.a = w[0];
  q.b = w[2];
  q.c = w[1];
  q.a_prime = state.m11().real();
  q.b_prime = 2.0 * state.m12().imag();
  q.validate();
  return q;
}

double TiltAngle::magnitude() const { return std::abs(degrees); }

TiltAngle tilt_angle(const MeasurementQuadratic& q) {
  q.validate();
  const double scale = q.a + q.c;
  TiltAngle t;
  if (std::abs(q.a - q.c) <= 1e-14 * scale && std::abs(q.b) <= 1e-14 * scale) {
    t.defined = false;
    t.degrees = 0.0;
    return t;
  }
  t.degrees = 0.5 * std::atan2(2.0 * q.b, q.a - q.c) * 180.0 / kPi;
  return t;
}

PrincipalWidths principal_widths(const MeasurementQuadratic& q) {
  const double mean = 0.5 * (q.a + q.c);
  const double half = 0.5 * (q.a - q.c);
  const double r = std::sqrt(half * half + q.b * q.b);
  const double lo = mean - r;
  const double hi = mean + r;
  if (!(lo > 0.0)) {
    throw DomainError{"principal_widths: non-positive eigenvalue"};
  }
  return {1.0 / std::sqrt(2.0 * lo), 1.0 / std::sqrt(2.0 * hi)};
}

PurePhaseParams p3_scaled_params(const DGParams& p, const PrepDesign& d) {
  const auto pp = phase_plane_params(p);
  const double m2 = d.meff() * d.meff();
  return {pp.A / m2, pp.B / m2};
}

std::vector<TiltPoint> tilt_curve(const DGParams& p, double wavelength, const PrepDesign& d, double f_m,
                                  std::span<const double> magnifications) {
  const auto scaled = p3_scaled_params(p, d);
  std::vector<TiltPoint> out;
  out.reserve(magnifications.size());
  for (double m : magnifications) {
    const auto q = measurement_quadratic(scaled, f_m, m, wavelength);
    out.push_back({m, tilt_angle(q).degrees});
  }
  return out;
}

}  // namespace purephase
