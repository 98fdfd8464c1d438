#pragma once

// Removal of the accidental (marginal-product) background from an estimated
// joint density.
//
// Bandwidth of an image is measured on its 2D power spectrum: bins are
// ordered by radial frequency |f| (cycles per sample) and the cutoff is the
// smallest radius whose enclosed power reaches the requested fraction.

#include <cstddef>
#include <span>

#include "purephase/density.hpp"

namespace purephase {

enum class HighPassShape {
  hard,      // zero every bin inside the cutoff
  gaussian,  // multiply by 1 - exp(-f^2 / 2 f_c^2)
};

struct CleaningConfig {
  int wavelet_order = 4;
  int decomp_level = 2;
  double psd_threshold = 0.95;
  double lowpass_cutoff = 0.25;  // cycles/pixel of the full image
  double kde_bandwidth = 1.5;    // pixels
  HighPassShape highpass = HighPassShape::hard;

  void validate(std::size_t rows, std::size_t cols) const;
};

/// Outer product of the two axis sums, scaled to the same total as d.
Density2D marginal_image(const Density2D& d);

/// d - marginal_image(d).
Density2D excess_g2(const Density2D& d);

/// Radius (cycles/sample) enclosing `fraction` of the power of a rows x cols image.
double psd_cutoff(std::span<const double> image, std::size_t rows, std::size_t cols, double fraction);

struct CleaningDiagnostics {
  double marginal_cutoff = 0.0;  // of the marginal's approximation band
  double density_cutoff = 0.0;   // of the density's approximation band
};

/// Wavelet approximation high-pass above the marginal's bandwidth, inverse
/// transform, Fourier low-pass, Gaussian smoothing, clamp and normalize.
Density2D clean_density(const Density2D& d, const CleaningConfig& cfg = {}, CleaningDiagnostics* diag = nullptr);

}  // namespace purephase
