#pragma once

// Orthogonal Daubechies filter banks and the periodized 2D DWT.

#include <cstddef>
#include <span>
#include <vector>

namespace purephase {

struct Wavelet {
  std::vector<double> lo;  // scaling filter, sum = sqrt(2)
  std::vector<double> hi;  // g[n] = (-1)^n lo[L-1-n]
};

/// db1 (Haar) to db4; the order is half the filter length.
Wavelet daubechies(int order);

/// Periodized multi-level 2D DWT in Mallat layout: after `level` steps the
/// approximation occupies the top-left (rows >> level) x (cols >> level)
/// block. Both sizes must be divisible by 2^level.
std::vector<double> dwt2(std::span<const double> image, std::size_t rows, std::size_t cols, const Wavelet& w,
                         int level);
std::vector<double> idwt2(std::span<const double> coeffs, std::size_t rows, std::size_t cols, const Wavelet& w,
                          int level);

/// Copies the top-left approximation block out of / into a Mallat layout.
std::vector<double> approximation(std::span<const double> coeffs, std::size_t rows, std::size_t cols, int level);
void set_approximation(std::span<double> coeffs, std::size_t rows, std::size_t cols, int level,
                       std::span<const double> approx);

}  // namespace purephase
