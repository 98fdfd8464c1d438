#pragma once

// Closed-form action of paraxial optical elements on Gaussian two-photon
// states, the three-lens preparation of the pure phase plane state, and the
// analytic partial-Fourier measurement density.
//
// Conventions: free space uses the kernel exp(+i k (x - x')^2 / 2z) / sqrt(i lambda z);
// QuadraticPhase{c} multiplies by exp(-i pi c x^2 / lambda), so a thin lens of
// focal length f is QuadraticPhase{1/f}; Scale{s} maps psi(x) to
// sqrt(|s|) psi(s x); a Fourier lens maps to the detector coordinate with
// the kernel exp(-2 pi i x' x / (lambda f_m)).

#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "purephase/biphoton.hpp"

namespace purephase {

struct QuadraticPhase {
  double c = 0.0;  // um^-1
};
struct Scale {
  double s = 1.0;
};
struct Fresnel {
  double z = 0.0;  // um
};
struct ThinLens {
  double f = 0.0;  // um
};
/// Single-lens imaging of the plane at object distance u.
struct LensImaging {
  double u = 0.0;
  double f = 0.0;
};
/// 2f Fourier transform onto detector coordinates.
struct FourierLens {
  double f_m = 0.0;
};

using ElementKind = std::variant<QuadraticPhase, Scale, Fresnel, ThinLens, LensImaging, FourierLens>;

struct OpticalElement {
  ElementKind kind;
  Photon target = Photon::both;

  void validate() const;
};

GaussianBiphotonState apply_element(const GaussianBiphotonState& state, const OpticalElement& e);
GaussianBiphotonState apply_chain(GaussianBiphotonState state, std::span<const OpticalElement> chain);

/// Fourier transform over x1 with kernel exp(-i q1 x1) / sqrt(2 pi); the
/// result's coefficients refer to (q1, x2).
GaussianBiphotonState partial_fourier(const GaussianBiphotonState& state, Photon target = Photon::first);

/// Lens layout of the three-lens preparation. Constructed only through make().
class PrepDesign {
 public:
  /// Throws DesignError when u >= f (no virtual image), f2 <= |v| (no real
  /// image after the 4F relay) or a focal length is not positive.
  static PrepDesign make(double f, double f2, double f3, double z_p);

  double f() const { return f_; }
  double f2() const { return f2_; }
  double f3() const { return f3_; }
  double z_p() const { return z_p_; }
  /// Object distance f - 2 z_p.
  double u() const { return f_ - 2.0 * z_p_; }
  /// Virtual image distance -(f - 2 z_p) f / (2 z_p).
  double v() const { return -(f_ - 2.0 * z_p_) * f_ / (2.0 * z_p_); }
  double m4f() const { return f3_ / f2_; }
  /// f f3 / (2 z_p f2).
  double meff() const { return f_ * f3_ / (2.0 * z_p_ * f2_); }

 private:
  PrepDesign(double f, double f2, double f3, double z_p) : f_{f}, f2_{f2}, f3_{f3}, z_p_{z_p} {}
  double f_, f2_, f3_, z_p_;
};

/// Element chain: Fresnel(z_p), LensImaging(f - 2 z_p, f), Scale(-1/M4F), all on both photons.
std::vector<OpticalElement> p3_chain(const PrepDesign& d);

/// Runs the chain on dg_state(p). The design's z_p must equal phase_plane_distance(p).
GaussianBiphotonState prepare_p3(const DGParams& p, double wavelength, const PrepDesign& d);

/// Scale(-1/Meff) applied to the pure phase state with phase_plane_params(p).
GaussianBiphotonState expected_p3_state(const DGParams& p, double wavelength, const PrepDesign& d);

/// Reads (A', B') = (Re m11, 2 Im m12) off a pure-phase-form state. Throws
/// DomainError if the state carries amplitude correlations or diagonal phase
/// beyond rel_tol of |m11|.
PurePhaseParams pure_phase_form(const GaussianBiphotonState& s, double rel_tol = 1e-9);

/// Exponent coefficients of rho_m(x_k, x_p) ~ exp(-(a xk^2 + 2 b xk xp + c xp^2)).
struct MeasurementQuadratic {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
  double a_prime = 0.0;
  double b_prime = 0.0;

  void validate() const;
  /// Normalized density value.
  double density(double xk, double xp) const;
  /// Sigma = 1/2 [[a, b], [b, c]]^-1.
  Bivariate covariance() const;
};

/// Closed form from the scaled pure phase coefficients.
MeasurementQuadratic measurement_quadratic(const PurePhaseParams& scaled, double f_m, double m_m,
                                           double wavelength);

/// Same density obtained by applying FourierLens(f_m) to photon 1 and
/// Scale(1/M_m) to photon 2 of an arbitrary state.
MeasurementQuadratic measure_state(const GaussianBiphotonState& state, double f_m, double m_m);

struct TiltAngle {
  double degrees = 0.0;  // in (-90, 90]
  bool defined = true;   // false for an isotropic density
  double magnitude() const;
};

/// 1/2 atan2(2b, a - c): direction of the density's minor axis in the
/// (x_k, x_p) plane, so |theta| is the major axis's inclination to x_p.
TiltAngle tilt_angle(const MeasurementQuadratic& q);

struct PrincipalWidths {
  double major = 0.0;
  double minor = 0.0;
};

PrincipalWidths principal_widths(const MeasurementQuadratic& q);

struct TiltPoint {
  double magnification = 0.0;
  double theta_deg = 0.0;
};

/// Scaled coefficients of the prepared state: phase_plane_params(p) / Meff^2.
PurePhaseParams p3_scaled_params(const DGParams& p, const PrepDesign& d);

std::vector<TiltPoint> tilt_curve(const DGParams& p, double wavelength, const PrepDesign& d, double f_m,
                                  std::span<const double> magnifications);

}  // namespace purephase
