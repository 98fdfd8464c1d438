#pragma once

// Frame statistics: the cross-frame correlation estimator of the joint
// density, width calibration from single-detector stacks, and the Fedorov
// ratio of an estimated position-position density.

#include <vector>

#include "purephase/density.hpp"
#include "purephase/fitting.hpp"
#include "purephase/frames.hpp"

namespace purephase {

/// Where dark-count suppression happens relative to summing over y.
enum class DarkOrder {
  /// Raw counts are summed over y and correlated; darks cancel on average.
  sum_then_correlate,
  /// The expected dark level is subtracted from every pixel before summing.
  suppress_then_sum,
};

struct EstimationOptions {
  /// Use the exact product of per-column means instead of the shifted-frame product.
  bool exact_mean_product = false;
  bool clamp = false;
  bool normalize = true;
  DarkOrder dark_order = DarkOrder::sum_then_correlate;
  /// Per-pixel per-frame dark probability; only read for suppress_then_sum.
  double dark_level = 0.0;
};

/// rho(x_k, x_p) = <c_k c_p> - <c_k><c_p> over frames of a two-arm stack;
/// axis0 is arm 0.
Density2D estimate_density(const FrameStack& stack, const EstimationOptions& opt = {});

struct CalibrationResult {
  double sigma = 0.0;         // calibrated sigma_- or sigma_+ (um)
  double peak_width = 0.0;    // pixel-corrected std of the correlation peak (um)
  double snr = 0.0;
  GaussFit1D fit;
  std::vector<double> offsets;  // abscissa of the correlation profile (um)
  std::vector<double> profile;  // background-subtracted correlation
};

/// Both calibrations map peak widths to sigma with unit factors: the
/// near-field autocorrelation peak is x1 - x2 with std sigma_-, and the
/// far-field autoconvolution peak is x1 + x2 with std lambda f / (2 pi sigma_+).
inline constexpr double kNearFieldFactor = 1.0;
inline constexpr double kFarFieldFactor = 1.0;

/// Frame-wise autocorrelation minus the shifted-frame accidental term,
/// fitted with a Gaussian. Throws FitError when the peak SNR is below 3.
CalibrationResult calibrate_sigma_minus(const FrameStack& nearfield);

/// Autoconvolution analogue for a far-field stack behind a lens of focal length `focal`.
CalibrationResult calibrate_sigma_plus(const FrameStack& farfield, double wavelength, double focal);

struct FedorovEstimate {
  double ratio = 0.0;
  double marginal_sigma = 0.0;
  double conditional_sigma = 0.0;
  std::size_t columns_used = 0;
};

/// Marginal of axis0 against the conditional axis0 width in the axis1
/// columns within half a marginal std of the center, from 1D Gaussian fits
/// with pixel blur removed.
FedorovEstimate estimate_fedorov(const Density2D& d);

}  // namespace purephase
