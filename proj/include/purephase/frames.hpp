#pragma once

// Monte Carlo photon-counting frames. Pair coordinates are drawn from a
// bivariate Gaussian, routed through a 50/50 beamsplitter onto two arms (or
// onto a single detector for calibration runs), binned and optionally
// clipped to binary counts.

#include <cstddef>
#include <cstdint>
#include <map>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "purephase/biphoton.hpp"
#include "purephase/optics.hpp"

namespace purephase {

struct DetectorConfig {
  double pixel_pitch = 0.0;  // um
  std::size_t width = 256;
  std::size_t height = 1;  // 1 selects row detectors
  double mean_pair_rate = 2.0;
  double dark_count_prob = 0.0;
  bool clip_to_binary = true;
  std::uint64_t seed = 1;
  /// Keep pairs whose photons both land in one arm.
  bool keep_unsplit = true;
  /// Relative std of the per-frame pair rate (Gamma distributed); 0 = fixed rate.
  double rate_jitter = 0.0;

  bool two_d() const { return height > 1; }
  /// Mean counts per pixel per frame on one arm.
  double expected_occupancy() const;
  /// Throws DomainError on bad geometry or when expected_occupancy() > 1.
  void validate() const;
};

/// Occupancy above which photon counting starts losing coincidences.
inline constexpr double kOccupancyWarning = 0.15;

/// Pitch that puts +-4 sigma of the widest axis of cov across `width` pixels.
double auto_pitch(const Bivariate& cov, std::size_t width);

struct Hit {
  std::uint32_t pixel;  // row-major y * width + x
  std::uint16_t count;
};

struct FrameGeometry {
  std::size_t arms = 2;
  std::size_t width = 0;
  std::size_t height = 1;
  double pitch = 1.0;

  std::size_t pixels() const { return width * height; }
  /// Center coordinate of column i (um), detector centered on the axis.
  double column_coord(std::size_t i) const { return (static_cast<double>(i) - 0.5 * static_cast<double>(width - 1)) * pitch; }
};

/// Sparse stack of frames; each (frame, arm) image is a pixel-sorted list of hits.
class FrameStack {
 public:
  FrameStack(FrameGeometry geometry, bool binary, std::uint64_t seed);

  const FrameGeometry& geometry() const { return geom_; }
  bool binary() const { return binary_; }
  std::uint64_t seed() const { return seed_; }
  std::size_t size() const { return (offsets_.size() - 1) / geom_.arms; }

  /// Adds one frame. Hits are sorted, merged and clipped when binary.
  void push_frame(std::vector<std::vector<Hit>> arms);

  std::span<const Hit> image(std::size_t frame, std::size_t arm) const;
  /// Column sums of one image (sums over y in 2D mode).
  std::vector<std::uint32_t> columns(std::size_t frame, std::size_t arm) const;

  /// Mean counts per pixel per frame on one arm.
  double mean_occupancy(std::size_t arm) const;
  std::uint64_t total_counts(std::size_t arm) const;

  /// Frames reordered so that frame k of the result is frame order[k] of this.
  FrameStack permuted(std::span<const std::size_t> order) const;

  std::map<std::string, std::string> metadata;

 private:
  FrameGeometry geom_;
  bool binary_;
  std::uint64_t seed_;
  std::vector<std::uint64_t> offsets_{0};
  std::vector<Hit> hits_;
};

/// splitmix64 finalizer; frame k draws from mt19937_64(splitmix64(seed ^ k)).
std::uint64_t splitmix64(std::uint64_t x);

using Sample2 = std::pair<double, double>;

/// Draws from the Gaussian with covariance cov (zero mean).
std::vector<Sample2> sample_bivariate(const Bivariate& cov, std::size_t n, std::mt19937_64& rng);

/// Draws (x_k, x_p) from rho_m.
std::vector<Sample2> sample_rho_m(const MeasurementQuadratic& q, std::size_t n, std::mt19937_64& rng);

/// Split measurement of rho_m: arm 0 holds x_k, arm 1 holds x_p.
FrameStack synthesize_frames(const MeasurementQuadratic& q, const DetectorConfig& det, std::size_t n_frames,
                             unsigned threads = 1);

/// Split measurement with both arms imaging position: arm 0 holds x1, arm 1 x2.
FrameStack synthesize_position_frames(const GaussianBiphotonState& state, const DetectorConfig& det,
                                      std::size_t n_frames, unsigned threads = 1);

/// Single detector imaging the crystal: both photons of each pair at (x1, x2).
FrameStack synthesize_nearfield(const DGParams& p, const DetectorConfig& det, std::size_t n_frames,
                                unsigned threads = 1);

/// Single detector behind a 2F lens of focal length `focal`: x = lambda f q / 2 pi.
FrameStack synthesize_farfield(const DGParams& p, double wavelength, double focal, const DetectorConfig& det,
                               std::size_t n_frames, unsigned threads = 1);

/// Covariances the synthesizers draw from, exposed for pitch selection and tests.
Bivariate nearfield_covariance(const DGParams& p);
Bivariate farfield_covariance(const DGParams& p, double wavelength, double focal);

/// PPF1 binary plus "<path>.meta" key=value sidecar.
void write_ppf(const FrameStack& stack, const std::string& path);
FrameStack read_ppf(const std::string& path);

}  // namespace purephase
