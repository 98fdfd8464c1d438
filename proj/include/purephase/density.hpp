#pragma once

// Sampled 2D densities and their on-disk forms (CSV with axis header rows,
// 16-bit PGM preview).

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace purephase {

struct Axis {
  std::string name;
  std::size_t n = 0;
  double origin = 0.0;  // coordinate of sample 0
  double pitch = 1.0;

  double coord(std::size_t i) const { return origin + pitch * static_cast<double>(i); }
  /// Symmetric axis of n samples centered on zero.
  static Axis centered(std::string name, std::size_t n, double pitch);
  void validate() const;
};

/// Row-major array over (axis0, axis1); value(i, j) sits at (axis0.coord(i), axis1.coord(j)).
class Density2D {
 public:
  Density2D(Axis a0, Axis a1, std::vector<double> values, bool normalized = false);
  static Density2D zeros(Axis a0, Axis a1);

  const Axis& axis0() const { return a0_; }
  const Axis& axis1() const { return a1_; }
  std::size_t rows() const { return a0_.n; }
  std::size_t cols() const { return a1_.n; }

  double operator()(std::size_t i, std::size_t j) const { return v_[i * a1_.n + j]; }
  double& at(std::size_t i, std::size_t j) { return v_[i * a1_.n + j]; }
  std::span<const double> values() const { return v_; }
  std::span<double> values() { return v_; }

  bool is_normalized() const { return normalized_; }
  double sum() const;
  /// Divided by its sum. Throws DomainError when the sum is not positive.
  Density2D normalized() const;
  /// Negative entries set to zero; clears the normalized flag.
  Density2D clamped() const;

  /// Sums over axis1 (one value per axis0 sample) and over axis0.
  std::vector<double> sum_over_axis1() const;
  std::vector<double> sum_over_axis0() const;

 private:
  Axis a0_, a1_;
  std::vector<double> v_;
  bool normalized_ = false;
};

/// Relative L2 distance ||a - b|| / ||b||; axes must have equal sizes.
double relative_l2(const Density2D& a, const Density2D& b);

struct DensityFile {
  Density2D density;
  std::string config_hash;
};

void write_csv(std::ostream& os, const Density2D& d, const std::string& config_hash);
DensityFile read_csv(std::istream& is);

/// Linear map of [0, max] to [0, 65535]; negatives map to 0.
void write_pgm(std::ostream& os, const Density2D& d, const std::string& config_hash);

struct PgmImage {
  std::size_t width = 0;
  std::size_t height = 0;
  unsigned maxval = 0;
  std::vector<std::uint16_t> pixels;  // row-major, height rows
};
PgmImage read_pgm(std::istream& is);

}  // namespace purephase
