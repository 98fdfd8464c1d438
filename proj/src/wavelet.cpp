#include "purephase/wavelet.hpp"

#include <cmath>

#include "purephase/errors.hpp"

namespace purephase {

Wavelet daubechies(int order) {
  Wavelet w;
  switch (order) {
    case 1:
      w.lo = {0.7071067811865476, 0.7071067811865476};
      break;
    case 2:
      w.lo = {0.48296291314469025, 0.836516303737469, 0.22414386804185735, -0.12940952255092145};
      break;
    case 3:
      w.lo = {0.3326705529509569,   0.8068915093133388,   0.4598775021193313,
              -0.13501102001039084, -0.08544127388224149, 0.035226291882100656};
      break;
    case 4:
      w.lo = {0.23037781330885523,  0.7148465705525415,   0.6308807679295904,  -0.02798376941698385,
              -0.18703481171888114, 0.030841381835986965, 0.032883011666982945, -0.010597401784997278};
      break;
    default:
      throw DomainError{"daubechies: order must be 1..4 (got " + std::to_string(order) + ")"};
  }
  const std::size_t n = w.lo.size();
  w.hi.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    w.hi[k] = (k % 2 == 0 ? 1.0 : -1.0) * w.lo[n - 1 - k];
  }
  return w;
}

namespace {

// One analysis step on a strided 1D signal of length n (even).
void analyze(double* x, std::size_t n, std::size_t stride, const Wavelet& w, std::vector<double>& tmp) {
  const std::size_t half = n / 2;
  tmp.assign(n, 0.0);
  for (std::size_t k = 0; k < half; ++k) {
    double a = 0.0, d = 0.0;
    for (std::size_t t = 0; t < w.lo.size(); ++t) {
      const double v = x[((2 * k + t) % n) * stride];
      a += w.lo[t] * v;
      d += w.hi[t] * v;
    }
    tmp[k] = a;
    tmp[half + k] = d;
  }
  for (std::size_t i = 0; i < n; ++i) {
    x[i * stride] = tmp[i];
  }
}

void synthesize(double* x, std::size_t n, std::size_t stride, const Wavelet& w, std::vector<double>& tmp) {
  const std::size_t half = n / 2;
  tmp.assign(n, 0.0);
  for (std::size_t k = 0; k < half; ++k) {
    const double a = x[k * stride];
    const double d = x[(half + k) * stride];
    for (std::size_t t = 0; t < w.lo.size(); ++t) {
      tmp[(2 * k + t) % n] += w.lo[t] * a + w.hi[t] * d;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    x[i * stride] = tmp[i];
  }
}

void check(std::size_t rows, std::size_t cols, std::size_t size, int level) {
  if (level < 1) {
    throw DomainError{"dwt2: level must be at least 1"};
  }
  const std::size_t m = std::size_t{1} << level;
  if (rows % m != 0 || cols % m != 0 || rows < m || cols < m) {
    throw DomainError{"dwt2: image dimensions must be divisible by 2^level"};
  }
  if (size != rows * cols) {
    throw DomainError{"dwt2: buffer does not match dimensions"};
  }
}

}  // namespace

std::vector<double> dwt2(std::span<const double> image, std::size_t rows, std::size_t cols, const Wavelet& w,
                         int level) {
  check(rows, cols, image.size(), level);
  std::vector<double> c(image.begin(), image.end());
  std::vector<double> tmp;
  std::size_t r = rows, q = cols;
  for (int l = 0; l < level; ++l) {
    for (std::size_t i = 0; i < r; ++i) {
      analyze(&c[i * cols], q, 1, w, tmp);
    }
    for (std::size_t j = 0; j < q; ++j) {
      analyze(&c[j], r, cols, w, tmp);
    }
    r /= 2;
    q /= 2;
  }
  return c;
}

std::vector<double> idwt2(std::span<const double> coeffs, std::size_t rows, std::size_t cols, const Wavelet& w,
                          int level) {
  check(rows, cols, coeffs.size(), level);
  std::vector<double> x(coeffs.begin(), coeffs.end());
  std::vector<double> tmp;
  for (int l = level - 1; l >= 0; --l) {
    const std::size_t r = rows >> l;
    const std::size_t q = cols >> l;
    for (std::size_t j = 0; j < q; ++j) {
      synthesize(&x[j], r, cols, w, tmp);
    }
    for (std::size_t i = 0; i < r; ++i) {
      synthesize(&x[i * cols], q, 1, w, tmp);
    }
  }
  return x;
}

std::vector<double> approximation(std::span<const double> coeffs, std::size_t rows, std::size_t cols, int level) {
  const std::size_t r = rows >> level;
  const std::size_t q = cols >> level;
  std::vector<double> a(r * q);
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < q; ++j) {
      a[i * q + j] = coeffs[i * cols + j];
    }
  }
  return a;
}

void set_approximation(std::span<double> coeffs, std::size_t rows, std::size_t cols, int level,
                       std::span<const double> approx) {
  const std::size_t r = rows >> level;
  const std::size_t q = cols >> level;
  if (approx.size() != r * q) {
    throw DomainError{"set_approximation: block size mismatch"};
  }
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < q; ++j) {
      coeffs[i * cols + j] = approx[i * q + j];
    }
  }
}

}  // namespace purephase
