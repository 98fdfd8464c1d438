#pragma once

// Sampled two-photon wavefunction on an (x1, x2) grid with FFT propagation.
// Kept independent of the closed-form optics so it can serve as their check;
// it only borrows the element descriptions.

#include <array>
#include <cstddef>
#include <vector>

#include "purephase/biphoton.hpp"
#include "purephase/density.hpp"
#include "purephase/optics.hpp"

namespace purephase {

struct GridSpec {
  Axis x1;
  Axis x2;

  /// n x n grid of the given pitch centered on the origin.
  static GridSpec square(std::size_t n, double pitch);
};

/// What a state needs from a grid: finest pitch, smallest extent and the
/// power-of-two size those imply on a square grid.
struct SamplingRequirement {
  double max_pitch = 0.0;
  double min_extent = 0.0;
  std::size_t min_n = 0;
};

/// Rules: pitch <= sigma_min / 4 (smallest principal std of |psi|^2) and
/// pi / pitch >= 6 sigma_q,max (momentum Nyquist); extent >= extent_sigmas
/// times the largest principal std and >= 4 pi / sigma_q,cond (so that a
/// partial transform along either axis is resolved).
SamplingRequirement sampling_requirement(const GaussianBiphotonState& s, double extent_sigmas = 8.0);

/// Smallest square power-of-two grid meeting sampling_requirement.
GridSpec adequate_spec(const GaussianBiphotonState& s, double extent_sigmas = 12.0);

class GridState {
 public:
  /// Axis sizes must be powers of two.
  GridState(GridSpec spec, std::vector<cplx> amplitudes, double wavelength);

  const GridSpec& spec() const { return spec_; }
  const Axis& axis(int k) const { return k == 0 ? spec_.x1 : spec_.x2; }
  std::size_t n1() const { return spec_.x1.n; }
  std::size_t n2() const { return spec_.x2.n; }
  double wavelength() const { return wavelength_; }

  cplx operator()(std::size_t i, std::size_t j) const { return amp_[i * spec_.x2.n + j]; }
  const std::vector<cplx>& amplitudes() const { return amp_; }

  /// Sum |psi|^2 dx1 dx2.
  double norm() const;
  GridState normalized() const;

 private:
  GridSpec spec_;
  std::vector<cplx> amp_;
  double wavelength_;
};

/// Pointwise evaluation followed by normalization. Throws SamplingError
/// naming the required size when the grid is inadequate.
GridState discretize(const GaussianBiphotonState& state, const GridSpec& spec);

/// Transfer function exp(-i z q^2 / 2k) along the target axis (or both).
/// Throws SamplingError when the moment-propagated width leaves the grid.
GridState fft_fresnel(const GridState& g, double z, Photon target = Photon::both);

GridState grid_quadratic_phase(const GridState& g, double c, Photon target = Photon::both);

/// psi(x) -> sqrt|s| psi(s x) by relabeling the axis; negative s reverses it.
GridState grid_scale(const GridState& g, double s, Photon target = Photon::both);

/// (1/sqrt(2 pi)) sum psi e^{-i q x} dx along the target axis, which is
/// relabeled as increasing angular frequency q (rad/um).
GridState grid_pft(const GridState& g, Photon target = Photon::first);

/// Fourier lens onto detector coordinates x' = lambda f_m q / (2 pi).
GridState grid_fourier_lens(const GridState& g, double f_m, Photon target = Photon::first);

/// Any optical element, dispatched to the routines above.
GridState grid_apply(const GridState& g, const OpticalElement& e);

/// Cell probabilities |psi|^2 dx1 dx2, normalized to unit sum.
Density2D grid_density(const GridState& g);

/// Marginal probability density (per unit coordinate) along one axis.
struct Profile {
  Axis axis;
  std::vector<double> values;
};
std::array<Profile, 2> grid_marginals(const GridState& g);

Bivariate grid_moments(const GridState& g);

/// Moments of axis-0 within the axis-1 column nearest `x2`.
ConditionalMoments grid_conditional(const GridState& g, double x2 = 0.0);

/// Marginal std of axis 0 over its conditional std at x2.
double grid_fedorov(const GridState& g, double x2 = 0.0);

/// Mass-weighted least-squares slope of E[axis0 | axis1] against axis1.
double grid_conditional_slope(const GridState& g);

/// Analytic density on the grid's sample points, as cell probabilities.
Density2D rasterize(const GaussianBiphotonState& s, const GridSpec& spec);

}  // namespace purephase
