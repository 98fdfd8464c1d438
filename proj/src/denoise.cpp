#include "purephase/denoise.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <vector>

#include "purephase/errors.hpp"
#include "purephase/fft.hpp"
#include "purephase/wavelet.hpp"

namespace purephase {

void CleaningConfig::validate(std::size_t rows, std::size_t cols) const {
  if (wavelet_order < 1 || wavelet_order > 4) {
    throw DomainError{"cleaning: wavelet order must be 1..4"};
  }
  const auto min_dim = std::min(rows, cols);
  const int max_level = static_cast<int>(std::bit_width(min_dim)) - 1 - 2;
  if (decomp_level < 1 || decomp_level > max_level) {
    throw DomainError{"cleaning: decomposition level must lie in [1, log2(min dim) - 2] = [1, " +
                      std::to_string(max_level) + "]"};
  }
  const std::size_t m = std::size_t{1} << decomp_level;
  if (rows % m != 0 || cols % m != 0) {
    throw DomainError{"cleaning: image dimensions must be divisible by 2^level"};
  }
  if (!(psd_threshold > 0.0 && psd_threshold < 1.0)) {
    throw DomainError{"cleaning: psd threshold must lie in (0, 1)"};
  }
  if (!(lowpass_cutoff > 0.0)) {
    throw DomainError{"cleaning: low-pass cutoff must be positive"};
  }
  if (!(kde_bandwidth >= 0.0)) {
    throw DomainError{"cleaning: smoothing bandwidth must be non-negative"};
  }
}

Density2D marginal_image(const Density2D& d) {
  const auto s0 = d.sum_over_axis1();
  const auto s1 = d.sum_over_axis0();
  const double total = d.sum();
  if (total == 0.0) {
    throw DomainError{"marginal_image: density sums to zero"};
  }
  Density2D out = Density2D::zeros(d.axis0(), d.axis1());
  for (std::size_t i = 0; i < d.rows(); ++i) {
    for (std::size_t j = 0; j < d.cols(); ++j) {
      out.at(i, j) = s0[i] * s1[j] / total;
    }
  }
  return d.is_normalized() ? Density2D{d.axis0(), d.axis1(), {out.values().begin(), out.values().end()}, true} : out;
}

Density2D excess_g2(const Density2D& d) {
  const auto m = marginal_image(d);
  Density2D out = Density2D::zeros(d.axis0(), d.axis1());
  for (std::size_t k = 0; k < d.values().size(); ++k) {
    out.values()[k] = d.values()[k] - m.values()[k];
  }
  return out;
}

namespace {

double radial_frequency(std::size_t i, std::size_t j, std::size_t rows, std::size_t cols) {
  const double fi = fft::angular_frequency(i, rows, 1.0) / (2.0 * kPi);
  const double fj = fft::angular_frequency(j, cols, 1.0) / (2.0 * kPi);
  return std::hypot(fi, fj);
}

std::vector<cplx> spectrum(std::span<const double> image, std::size_t rows, std::size_t cols) {
  std::vector<cplx> f(image.begin(), image.end());
  fft::transform_2d(f, rows, cols, -1);
  return f;
}

std::vector<double> real_inverse(std::vector<cplx> f, std::size_t rows, std::size_t cols) {
  fft::transform_2d(f, rows, cols, +1);
  std::vector<double> out(f.size());
  const double inv = 1.0 / static_cast<double>(rows * cols);
  for (std::size_t k = 0; k < f.size(); ++k) {
    out[k] = f[k].real() * inv;
  }
  return out;
}

// Separable Gaussian blur, zero outside the image, kernel cut at 4 sigma.
std::vector<double> gaussian_blur(const std::vector<double>& img, std::size_t rows, std::size_t cols, double sigma) {
  if (sigma <= 0.0) {
    return img;
  }
  const int half = static_cast<int>(std::ceil(4.0 * sigma));
  std::vector<double> k(2 * static_cast<std::size_t>(half) + 1);
  for (int t = -half; t <= half; ++t) {
    k[static_cast<std::size_t>(t + half)] = std::exp(-0.5 * t * t / (sigma * sigma));
  }
  const double ks = std::accumulate(k.begin(), k.end(), 0.0);
  for (auto& v : k) {
    v /= ks;
  }
  std::vector<double> tmp(img.size(), 0.0), out(img.size(), 0.0);
  const auto R = static_cast<long>(rows);
  const auto C = static_cast<long>(cols);
  for (long i = 0; i < R; ++i) {
    for (long j = 0; j < C; ++j) {
      double s = 0.0;
      for (int t = -half; t <= half; ++t) {
        const long jj = j + t;
        if (jj >= 0 && jj < C) {
          s += k[static_cast<std::size_t>(t + half)] * img[static_cast<std::size_t>(i * C + jj)];
        }
      }
      tmp[static_cast<std::size_t>(i * C + j)] = s;
    }
  }
  for (long i = 0; i < R; ++i) {
    for (long j = 0; j < C; ++j) {
      double s = 0.0;
      for (int t = -half; t <= half; ++t) {
        const long ii = i + t;
        if (ii >= 0 && ii < R) {
          s += k[static_cast<std::size_t>(t + half)] * tmp[static_cast<std::size_t>(ii * C + j)];
        }
      }
      out[static_cast<std::size_t>(i * C + j)] = s;
    }
  }
  return out;
}

}  // namespace

double psd_cutoff(std::span<const double> image, std::size_t rows, std::size_t cols, double fraction) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw DomainError{"psd_cutoff: fraction must lie in (0, 1)"};
  }
  const auto f = spectrum(image, rows, cols);
  std::vector<std::pair<double, double>> bins;
  bins.reserve(f.size());
  double total = 0.0;
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      const double p = std::norm(f[i * cols + j]);
      bins.emplace_back(radial_frequency(i, j, rows, cols), p);
      total += p;
    }
  }
  if (!(total > 0.0)) {
    throw DomainError{"psd_cutoff: image has no power"};
  }
  std::sort(bins.begin(), bins.end());
  double acc = 0.0;
  for (const auto& [r, p] : bins) {
    acc += p;
    if (acc >= fraction * total) {
      return r;
    }
  }
  return bins.back().first;
}

Density2D clean_density(const Density2D& d, const CleaningConfig& cfg, CleaningDiagnostics* diag) {
  const std::size_t rows = d.rows();
  const std::size_t cols = d.cols();
  cfg.validate(rows, cols);
  const Wavelet w = daubechies(cfg.wavelet_order);
  const int level = cfg.decomp_level;
  const std::size_t ar = rows >> level;
  const std::size_t ac = cols >> level;

  const Density2D marg = marginal_image(d);
  auto coeffs = dwt2(d.values(), rows, cols, w, level);
  const auto approx_m = approximation(coeffs, rows, cols, level);
  const auto approx_marg = approximation(dwt2(marg.values(), rows, cols, w, level), rows, cols, level);

  const double cutoff = psd_cutoff(approx_marg, ar, ac, cfg.psd_threshold);
  if (diag != nullptr) {
    diag->marginal_cutoff = cutoff;
    diag->density_cutoff = psd_cutoff(approx_m, ar, ac, cfg.psd_threshold);
  }

  auto spec = spectrum(approx_m, ar, ac);
  for (std::size_t i = 0; i < ar; ++i) {
    for (std::size_t j = 0; j < ac; ++j) {
      const double r = radial_frequency(i, j, ar, ac);
      double gain = 1.0;
      if (cfg.highpass == HighPassShape::hard) {
        gain = r <= cutoff ? 0.0 : 1.0;
      } else {
        gain = 1.0 - std::exp(-0.5 * r * r / (cutoff * cutoff));
      }
      spec[i * ac + j] *= gain;
    }
  }
  set_approximation(coeffs, rows, cols, level, real_inverse(std::move(spec), ar, ac));
  const auto rebuilt = idwt2(coeffs, rows, cols, w, level);

  auto full = spectrum(rebuilt, rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      if (radial_frequency(i, j, rows, cols) > cfg.lowpass_cutoff) {
        full[i * cols + j] = 0.0;
      }
    }
  }
  auto smooth = gaussian_blur(real_inverse(std::move(full), rows, cols), rows, cols, cfg.kde_bandwidth);
  for (auto& v : smooth) {
    v = std::max(v, 0.0);
  }
  return Density2D{d.axis0(), d.axis1(), std::move(smooth)}.normalized();
}

}  // namespace purephase
