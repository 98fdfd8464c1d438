#include "purephase/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "purephase/errors.hpp"
#include "purephase/fitting.hpp"

namespace purephase {

namespace {

struct Col {
  std::uint32_t x;
  std::uint32_t n;
};

// Column sums of every frame of one arm, sparse and sorted by column.
std::vector<std::vector<Col>> sparse_columns(const FrameStack& s, std::size_t arm) {
  const std::size_t w = s.geometry().width;
  std::vector<std::vector<Col>> out(s.size());
  for (std::size_t f = 0; f < s.size(); ++f) {
    auto& cols = out[f];
    for (const Hit& h : s.image(f, arm)) {
      cols.push_back(Col{static_cast<std::uint32_t>(h.pixel % w), h.count});
    }
    std::sort(cols.begin(), cols.end(), [](const Col& a, const Col& b) { return a.x < b.x; });
    std::size_t k = 0;
    for (const Col& c : cols) {
      if (k > 0 && cols[k - 1].x == c.x) {
        cols[k - 1].n += c.n;
      } else {
        cols[k++] = c;
      }
    }
    cols.resize(k);
  }
  return out;
}

Axis column_axis(const FrameGeometry& g, const char* name) {
  return Axis{name, g.width, g.column_coord(0), g.pitch};
}

}  // namespace

Density2D estimate_density(const FrameStack& stack, const EstimationOptions& opt) {
  const auto& g = stack.geometry();
  if (g.arms != 2) {
    throw DomainError{"estimate_density: stack must have two arms"};
  }
  const std::size_t n = stack.size();
  if (n < 2) {
    throw DomainError{"estimate_density: need at least 2 frames"};
  }
  const std::size_t w = g.width;
  const auto ck = sparse_columns(stack, 0);
  const auto cp = sparse_columns(stack, 1);

  // Integer accumulation keeps the result independent of summation order.
  std::vector<std::int64_t> same(w * w, 0);
  std::vector<std::int64_t> shifted(w * w, 0);
  std::vector<std::int64_t> sum_k(w, 0), sum_p(w, 0), head_k(w, 0), tail_p(w, 0);
  for (std::size_t f = 0; f < n; ++f) {
    for (const Col& a : ck[f]) {
      sum_k[a.x] += a.n;
      if (f + 1 < n) {
        head_k[a.x] += a.n;
      }
      for (const Col& b : cp[f]) {
        same[a.x * w + b.x] += static_cast<std::int64_t>(a.n) * b.n;
      }
      if (f + 1 < n) {
        for (const Col& b : cp[f + 1]) {
          shifted[a.x * w + b.x] += static_cast<std::int64_t>(a.n) * b.n;
        }
      }
    }
    for (const Col& b : cp[f]) {
      sum_p[b.x] += b.n;
      if (f > 0) {
        tail_p[b.x] += b.n;
      }
    }
  }

  const double nn = static_cast<double>(n);
  const double d = opt.dark_order == DarkOrder::suppress_then_sum ? opt.dark_level * static_cast<double>(g.height) : 0.0;
  std::vector<double> v(w * w);
  for (std::size_t i = 0; i < w; ++i) {
    const double mk = static_cast<double>(sum_k[i]) / nn;
    const double mk_head = static_cast<double>(head_k[i]) / (nn - 1.0);
    for (std::size_t j = 0; j < w; ++j) {
      const double mp = static_cast<double>(sum_p[j]) / nn;
      const double mp_tail = static_cast<double>(tail_p[j]) / (nn - 1.0);
      const double first = static_cast<double>(same[i * w + j]) / nn;
      double value = 0.0;
      if (opt.exact_mean_product) {
        // Subtracting a constant from every column leaves this form unchanged.
        value = first - mk * mp;
      } else {
        value = first - static_cast<double>(shifted[i * w + j]) / (nn - 1.0);
        value -= d * (mp - mp_tail) + d * (mk - mk_head);
      }
      v[i * w + j] = value;
    }
  }

  const bool position = stack.metadata.count("kind") && stack.metadata.at("kind") == "position";
  Density2D out{column_axis(g, position ? "x1" : "x_k"), column_axis(g, position ? "x2" : "x_p"), std::move(v)};
  if (opt.clamp) {
    out = out.clamped();
  }
  return opt.normalize ? out.normalized() : out;
}

namespace {

enum class Pairing { difference, sum };

// Pair-rate fluctuations leave within-frame accidentals in excess of the
// cross-frame ones; they follow the cross-frame profile `bg`, so it enters
// the model with a free weight next to the Gaussian and the offset.
void refit_with_background(GaussFit1D& fit, const std::vector<double>& x, const std::vector<double>& y,
                           const std::vector<double>& bg) {
  const double bg_peak = *std::max_element(bg.begin(), bg.end());
  if (!(bg_peak > 0.0)) {
    return;
  }
  const ResidualFn res = [&](const Eigen::VectorXd& p) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(x.size()));
    for (std::size_t k = 0; k < x.size(); ++k) {
      const double u = (x[k] - p[1]) / p[2];
      out[static_cast<Eigen::Index>(k)] = p[3] + p[0] * std::exp(-0.5 * u * u) + p[4] * bg[k] / bg_peak - y[k];
    }
    return out;
  };
  const ValidFn valid = [](const Eigen::VectorXd& p) { return p[2] > 0.0; };
  Eigen::VectorXd p0(5);
  p0 << fit.amplitude, fit.mean, fit.sigma, fit.offset, 0.0;
  const double scale = std::max(std::abs(fit.amplitude), 1e-300);
  const std::vector<double> steps{1e-6 * scale, 1e-6 * fit.sigma, 1e-6 * fit.sigma, 1e-6 * scale, 1e-6 * scale};
  try {
    const auto lm = levenberg_marquardt(res, p0, steps, valid);
    if (lm.params[0] > 0.0) {
      fit.amplitude = lm.params[0];
      fit.mean = lm.params[1];
      fit.sigma = lm.params[2];
      fit.offset = lm.params[3];
      fit.residual_rms = std::sqrt(2.0 * lm.cost / static_cast<double>(x.size()));
      fit.iterations += lm.iterations;
    }
  } catch (const FitError&) {
    // Keep the plain Gaussian fit.
  }
}

CalibrationResult calibrate(const FrameStack& s, Pairing mode) {
  const auto& g = s.geometry();
  if (g.arms != 1) {
    throw DomainError{"calibration needs a single-detector stack"};
  }
  const std::size_t n = s.size();
  if (n < 2) {
    throw DomainError{"calibration needs at least 2 frames"};
  }
  const std::size_t w = g.width;
  const std::size_t bins = 2 * w - 1;
  const auto cols = sparse_columns(s, 0);
  std::vector<std::int64_t> same(bins, 0);
  std::vector<std::int64_t> shifted(bins, 0);
  auto bin_of = [&](std::uint32_t a, std::uint32_t b) {
    return mode == Pairing::difference ? static_cast<std::size_t>(static_cast<long long>(b) - a + static_cast<long long>(w) - 1)
                                       : static_cast<std::size_t>(a + b);
  };
  for (std::size_t f = 0; f < n; ++f) {
    for (const Col& a : cols[f]) {
      for (const Col& b : cols[f]) {
        // A photon never pairs with itself.
        const std::int64_t k = a.x == b.x ? static_cast<std::int64_t>(a.n) * (a.n - 1) : static_cast<std::int64_t>(a.n) * b.n;
        same[bin_of(a.x, b.x)] += k;
      }
      if (f + 1 < n) {
        for (const Col& b : cols[f + 1]) {
          shifted[bin_of(a.x, b.x)] += static_cast<std::int64_t>(a.n) * b.n;
        }
      }
    }
  }

  CalibrationResult r;
  const double nn = static_cast<double>(n);
  std::vector<double> fx, fy, fb;
  for (std::size_t k = 0; k < bins; ++k) {
    const double off = (static_cast<double>(k) - static_cast<double>(w - 1)) * g.pitch;
    const double val = static_cast<double>(same[k]) / nn - static_cast<double>(shifted[k]) / (nn - 1.0);
    r.offsets.push_back(off);
    r.profile.push_back(val);
    // The zero-offset bin of the difference profile loses same-pixel pairs to clipping.
    if (mode == Pairing::difference && k == w - 1) {
      continue;
    }
    fx.push_back(off);
    fy.push_back(val);
    fb.push_back(static_cast<double>(shifted[k]) / (nn - 1.0));
  }
  r.fit = fit_gaussian_1d(fx, fy);
  refit_with_background(r.fit, fx, fy, fb);
  r.snr = r.fit.residual_rms > 0.0 ? r.fit.amplitude / r.fit.residual_rms : INFINITY;
  if (!(r.snr >= 3.0)) {
    throw FitError{"no significant correlation peak (SNR " + std::to_string(r.snr) + ")"};
  }
  const double var = r.fit.sigma * r.fit.sigma - g.pitch * g.pitch / 6.0;
  if (!(var > 0.0)) {
    throw FitError{"correlation peak narrower than the pixel blur"};
  }
  r.peak_width = std::sqrt(var);
  return r;
}

}  // namespace

CalibrationResult calibrate_sigma_minus(const FrameStack& nearfield) {
  auto r = calibrate(nearfield, Pairing::difference);
  r.sigma = kNearFieldFactor * r.peak_width;
  return r;
}

CalibrationResult calibrate_sigma_plus(const FrameStack& farfield, double wavelength, double focal) {
  if (!(wavelength > 0.0) || !(focal > 0.0)) {
    throw DomainError{"calibrate_sigma_plus: wavelength and focal length must be positive"};
  }
  auto r = calibrate(farfield, Pairing::sum);
  r.sigma = kFarFieldFactor * wavelength * focal / (2.0 * kPi * r.peak_width);
  return r;
}

FedorovEstimate estimate_fedorov(const Density2D& d) {
  std::vector<double> x0(d.rows()), x1(d.cols());
  for (std::size_t i = 0; i < d.rows(); ++i) {
    x0[i] = d.axis0().coord(i);
  }
  for (std::size_t j = 0; j < d.cols(); ++j) {
    x1[j] = d.axis1().coord(j);
  }
  const double blur0 = d.axis0().pitch * d.axis0().pitch / 12.0;
  const auto marg0 = fit_gaussian_1d(x0, d.sum_over_axis1());
  const auto marg1 = fit_gaussian_1d(x1, d.sum_over_axis0());

  double wsum = 0.0;
  double vsum = 0.0;
  FedorovEstimate out;
  std::vector<double> column(d.rows());
  for (std::size_t j = 0; j < d.cols(); ++j) {
    if (std::abs(x1[j] - marg1.mean) > 0.5 * marg1.sigma) {
      continue;
    }
    double mass = 0.0;
    for (std::size_t i = 0; i < d.rows(); ++i) {
      column[i] = d(i, j);
      mass += column[i];
    }
    if (!(mass > 0.0)) {
      continue;
    }
    try {
      const auto fit = fit_gaussian_1d(x0, column);
      wsum += mass;
      vsum += mass * fit.sigma * fit.sigma;
      ++out.columns_used;
    } catch (const FitError&) {
      // Column too noisy to fit; the remaining ones carry the estimate.
    }
  }
  if (out.columns_used == 0) {
    throw FitError{"estimate_fedorov: no conditional column could be fitted"};
  }
  const double vm = marg0.sigma * marg0.sigma - blur0;
  const double vc = vsum / wsum - blur0;
  if (!(vm > 0.0) || !(vc > 0.0)) {
    throw FitError{"estimate_fedorov: widths below the pixel blur"};
  }
  out.marginal_sigma = std::sqrt(vm);
  out.conditional_sigma = std::sqrt(vc);
  out.ratio = out.marginal_sigma / out.conditional_sigma;
  return out;
}

}  // namespace purephase
