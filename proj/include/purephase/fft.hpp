#pragma once

// Thin FFTW wrapper over row-major complex arrays. Transforms are
// unnormalized; sign -1 is the forward (e^{-i...}) direction.

#include <cstddef>
#include <span>

#include "purephase/biphoton.hpp"

namespace purephase::fft {

/// In-place 1D DFT along `axis` (0 = rows index, 1 = contiguous) of an n0 x n1 array.
void transform_axis(std::span<cplx> data, std::size_t n0, std::size_t n1, int axis, int sign);

/// In-place 2D DFT of an n0 x n1 array.
void transform_2d(std::span<cplx> data, std::size_t n0, std::size_t n1, int sign);

/// Angular frequency of DFT bin j for n samples at pitch d: 2 pi j'/(n d), j' wrapped to [-n/2, n/2).
double angular_frequency(std::size_t j, std::size_t n, double d);

}  // namespace purephase::fft
