#include "purephase/grid.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <string>

#include "purephase/errors.hpp"
#include "purephase/fft.hpp"

namespace purephase {

namespace {

struct Eigen2 {
  double hi, lo;
};

Eigen2 eig_sym(double a, double c, double b) {
  const double mean = 0.5 * (a + c);
  const double r = std::hypot(0.5 * (a - c), b);
  return {mean + r, mean - r};
}

std::vector<int> axes_of(Photon t) {
  if (t == Photon::both) {
    return {0, 1};
  }
  return {t == Photon::first ? 0 : 1};
}

// Visits every sample; f(i, j, k) with k the flat index.
template <class F>
void for_each_index(const GridState& g, F&& f) {
  const std::size_t n2 = g.n2();
  for (std::size_t i = 0; i < g.n1(); ++i) {
    for (std::size_t j = 0; j < n2; ++j) {
      f(i, j, i * n2 + j);
    }
  }
}

double coord_on(const GridSpec& s, int axis, std::size_t i, std::size_t j) {
  return axis == 0 ? s.x1.coord(i) : s.x2.coord(j);
}

std::string fmt(double v) { return std::to_string(v); }

}  // namespace

GridSpec GridSpec::square(std::size_t n, double pitch) {
  return {Axis::centered("x1", n, pitch), Axis::centered("x2", n, pitch)};
}

SamplingRequirement sampling_requirement(const GaussianBiphotonState& s, double extent_sigmas) {
  const auto cov = s.intensity_covariance();
  const auto ev = eig_sym(cov.var1, cov.var2, cov.cov12);
  const double sigma_max = std::sqrt(ev.hi);
  const double sigma_min = std::sqrt(ev.lo);
  const auto qcov = momentum_covariance(s);
  const double sigma_q_max = std::sqrt(eig_sym(qcov.var1, qcov.var2, qcov.cov12).hi);

  const auto pft1 = partial_fourier(s, Photon::first).intensity_precision();
  const auto pft2 = partial_fourier(s, Photon::second).intensity_precision();
  const double sigma_q_cond = std::min(1.0 / std::sqrt(2.0 * pft1[0]), 1.0 / std::sqrt(2.0 * pft2[1]));

  SamplingRequirement r;
  r.max_pitch = std::min(sigma_min / 4.0, kPi / (6.0 * sigma_q_max));
  r.min_extent = std::max(extent_sigmas * sigma_max, 4.0 * kPi / sigma_q_cond);
  r.min_n = std::bit_ceil(static_cast<std::size_t>(std::ceil(r.min_extent / r.max_pitch)));
  return r;
}

GridSpec adequate_spec(const GaussianBiphotonState& s, double extent_sigmas) {
  const auto r = sampling_requirement(s, extent_sigmas);
  return GridSpec::square(r.min_n, r.max_pitch);
}

GridState::GridState(GridSpec spec, std::vector<cplx> amplitudes, double wavelength)
    : spec_{std::move(spec)}, amp_{std::move(amplitudes)}, wavelength_{wavelength} {
  spec_.x1.validate();
  spec_.x2.validate();
  if (!std::has_single_bit(spec_.x1.n) || !std::has_single_bit(spec_.x2.n)) {
    throw SamplingError{"grid sizes must be powers of two"};
  }
  if (amp_.size() != spec_.x1.n * spec_.x2.n) {
    throw DomainError{"GridState: amplitude count does not match grid"};
  }
  if (!(wavelength_ > 0.0)) {
    throw DomainError{"GridState: wavelength must be positive"};
  }
}

double GridState::norm() const {
  double s = 0.0;
  for (const auto& a : amp_) {
    s += std::norm(a);
  }
  return s * spec_.x1.pitch * spec_.x2.pitch;
}

GridState GridState::normalized() const {
  const double n = norm();
  if (!(n > 0.0)) {
    throw DomainError{"GridState: zero field"};
  }
  const double k = 1.0 / std::sqrt(n);
  std::vector<cplx> out(amp_);
  for (auto& a : out) {
    a *= k;
  }
  return GridState{spec_, std::move(out), wavelength_};
}

GridState discretize(const GaussianBiphotonState& state, const GridSpec& spec) {
  const auto r = sampling_requirement(state, 8.0);
  const double extent1 = static_cast<double>(spec.x1.n) * spec.x1.pitch;
  const double extent2 = static_cast<double>(spec.x2.n) * spec.x2.pitch;
  const double pitch = std::max(spec.x1.pitch, spec.x2.pitch);
  if (pitch > r.max_pitch * (1.0 + 1e-12) || std::min(extent1, extent2) < r.min_extent * (1.0 - 1e-12)) {
    throw SamplingError{"grid inadequate for state: need pitch <= " + fmt(r.max_pitch) + " um and extent >= " +
                        fmt(r.min_extent) + " um, i.e. N >= " + std::to_string(r.min_n) + " (got pitch " +
                        fmt(pitch) + ", extent " + fmt(std::min(extent1, extent2)) + ")"};
  }
  std::vector<cplx> amp(spec.x1.n * spec.x2.n);
  for (std::size_t i = 0; i < spec.x1.n; ++i) {
    const double x1 = spec.x1.coord(i);
    for (std::size_t j = 0; j < spec.x2.n; ++j) {
      amp[i * spec.x2.n + j] = state.amplitude(x1, spec.x2.coord(j));
    }
  }
  return GridState{spec, std::move(amp), state.wavelength()}.normalized();
}

GridState fft_fresnel(const GridState& g, double z, Photon target) {
  if (z == 0.0) {
    return g;
  }
  const double k = 2.0 * kPi / g.wavelength();
  std::vector<cplx> amp = g.amplitudes();
  const auto& spec = g.spec();
  const std::size_t n1 = g.n1();
  const std::size_t n2 = g.n2();

  for (int ax : axes_of(target)) {
    const Axis& a = ax == 0 ? spec.x1 : spec.x2;
    const std::size_t n = a.n;

    std::vector<cplx> spec_amp = amp;
    fft::transform_axis(spec_amp, n1, n2, ax, -1);
    std::vector<cplx> deriv(spec_amp.size());

    double mass = 0.0, sx = 0.0, sxx = 0.0, sq = 0.0, sqq = 0.0, qmass = 0.0;
    for (std::size_t i = 0; i < n1; ++i) {
      for (std::size_t j = 0; j < n2; ++j) {
        const std::size_t idx = i * n2 + j;
        const std::size_t along = ax == 0 ? i : j;
        const double q = fft::angular_frequency(along, n, a.pitch);
        const double x = a.coord(along);
        const double w = std::norm(amp[idx]);
        mass += w;
        sx += w * x;
        sxx += w * x * x;
        const double wq = std::norm(spec_amp[idx]);
        qmass += wq;
        sq += wq * q;
        sqq += wq * q * q;
        deriv[idx] = cplx{0.0, q} * spec_amp[idx];
      }
    }
    fft::transform_axis(deriv, n1, n2, ax, +1);
    double sxq = 0.0;
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n1; ++i) {
      for (std::size_t j = 0; j < n2; ++j) {
        const std::size_t idx = i * n2 + j;
        const double x = a.coord(ax == 0 ? i : j);
        sxq += (std::conj(amp[idx]) * x * cplx{0.0, -1.0} * deriv[idx] * inv_n).real();
      }
    }
    const double mx = sx / mass;
    const double mq = sq / qmass;
    const double var_x = sxx / mass - mx * mx;
    const double var_q = sqq / qmass - mq * mq;
    const double cov = sxq / mass - mx * mq;
    const double t = z / k;
    const double mean_z = mx + t * mq;
    const double var_z = var_x + 2.0 * t * cov + t * t * var_q;
    const double lo = a.origin;
    const double hi = a.coord(n - 1);
    const double sd = std::sqrt(std::max(var_z, 0.0));
    if (mean_z - 6.0 * sd < lo || mean_z + 6.0 * sd > hi) {
      throw SamplingError{"Fresnel propagation over " + fmt(z) + " um leaves the grid: predicted width " +
                          fmt(sd) + " um on axis " + a.name + " spanning [" + fmt(lo) + ", " + fmt(hi) + "]"};
    }

    for (std::size_t i = 0; i < n1; ++i) {
      for (std::size_t j = 0; j < n2; ++j) {
        const std::size_t idx = i * n2 + j;
        const double q = fft::angular_frequency(ax == 0 ? i : j, n, a.pitch);
        spec_amp[idx] *= std::polar(inv_n, -t * q * q / 2.0);
      }
    }
    fft::transform_axis(spec_amp, n1, n2, ax, +1);
    amp = std::move(spec_amp);
  }
  return GridState{spec, std::move(amp), g.wavelength()};
}

GridState grid_quadratic_phase(const GridState& g, double c, Photon target) {
  std::vector<cplx> amp = g.amplitudes();
  const double lam = g.wavelength();
  for (int ax : axes_of(target)) {
    for_each_index(g, [&](std::size_t i, std::size_t j, std::size_t k) {
      const double x = coord_on(g.spec(), ax, i, j);
      amp[k] *= std::polar(1.0, -kPi * c * x * x / lam);
    });
  }
  return GridState{g.spec(), std::move(amp), g.wavelength()};
}

GridState grid_scale(const GridState& g, double s, Photon target) {
  if (s == 0.0 || !std::isfinite(s)) {
    throw DomainError{"grid_scale: s must be non-zero"};
  }
  GridSpec spec = g.spec();
  std::vector<cplx> amp = g.amplitudes();
  const std::size_t n1 = g.n1();
  const std::size_t n2 = g.n2();
  const double gain = std::sqrt(std::abs(s));
  for (auto& a : amp) {
    a *= target == Photon::both ? gain * gain : gain;
  }
  for (int ax : axes_of(target)) {
    Axis& a = ax == 0 ? spec.x1 : spec.x2;
    const double last = a.coord(a.n - 1);
    if (s > 0.0) {
      a.origin /= s;
    } else {
      a.origin = last / s;
      std::vector<cplx> rev(amp.size());
      for (std::size_t i = 0; i < n1; ++i) {
        for (std::size_t j = 0; j < n2; ++j) {
          const std::size_t si = ax == 0 ? n1 - 1 - i : i;
          const std::size_t sj = ax == 1 ? n2 - 1 - j : j;
          rev[i * n2 + j] = amp[si * n2 + sj];
        }
      }
      amp = std::move(rev);
    }
    a.pitch /= std::abs(s);
  }
  return GridState{spec, std::move(amp), g.wavelength()};
}

GridState grid_pft(const GridState& g, Photon target) {
  GridSpec spec = g.spec();
  std::vector<cplx> amp = g.amplitudes();
  const std::size_t n1 = g.n1();
  const std::size_t n2 = g.n2();
  for (int ax : axes_of(target)) {
    Axis& a = ax == 0 ? spec.x1 : spec.x2;
    const std::size_t n = a.n;
    fft::transform_axis(amp, n1, n2, ax, -1);
    const double dq = 2.0 * kPi / (static_cast<double>(n) * a.pitch);
    const double q0 = -static_cast<double>(n / 2) * dq;
    const double pref = a.pitch / std::sqrt(2.0 * kPi);
    std::vector<cplx> out(amp.size());
    for (std::size_t i = 0; i < n1; ++i) {
      for (std::size_t j = 0; j < n2; ++j) {
        // Output bin k holds frequency q0 + k dq, i.e. DFT bin (k + n/2) mod n.
        const std::size_t k = ax == 0 ? i : j;
        const std::size_t src_bin = (k + n / 2) % n;
        const std::size_t si = ax == 0 ? src_bin : i;
        const std::size_t sj = ax == 1 ? src_bin : j;
        const double q = q0 + static_cast<double>(k) * dq;
        out[i * n2 + j] = amp[si * n2 + sj] * std::polar(pref, -q * a.origin);
      }
    }
    amp = std::move(out);
    a.name = ax == 0 ? "q1" : "q2";
    a.origin = q0;
    a.pitch = dq;
  }
  return GridState{spec, std::move(amp), g.wavelength()};
}

GridState grid_fourier_lens(const GridState& g, double f_m, Photon target) {
  if (!(f_m > 0.0)) {
    throw DomainError{"grid_fourier_lens: f_m must be positive"};
  }
  GridState q = grid_pft(g, target);
  GridSpec spec = q.spec();
  const double lf = g.wavelength() * f_m;
  const double to_x = lf / (2.0 * kPi);
  std::vector<cplx> amp = q.amplitudes();
  const auto axes = axes_of(target);
  // sqrt(dq/dx') per transformed axis, and 1/sqrt(i) each.
  const cplx factor = std::pow(std::polar(1.0 / std::sqrt(to_x), -kPi / 4.0), static_cast<double>(axes.size()));
  for (auto& a : amp) {
    a *= factor;
  }
  for (int ax : axes) {
    Axis& a = ax == 0 ? spec.x1 : spec.x2;
    a.name = ax == 0 ? "xk1" : "xk2";
    a.origin *= to_x;
    a.pitch *= to_x;
  }
  return GridState{spec, std::move(amp), g.wavelength()};
}

GridState grid_apply(const GridState& g, const OpticalElement& e) {
  e.validate();
  const Photon t = e.target;
  if (const auto* q = std::get_if<QuadraticPhase>(&e.kind)) {
    return grid_quadratic_phase(g, q->c, t);
  }
  if (const auto* s = std::get_if<Scale>(&e.kind)) {
    return grid_scale(g, s->s, t);
  }
  if (const auto* f = std::get_if<Fresnel>(&e.kind)) {
    return fft_fresnel(g, f->z, t);
  }
  if (const auto* l = std::get_if<ThinLens>(&e.kind)) {
    return grid_quadratic_phase(g, 1.0 / l->f, t);
  }
  if (const auto* im = std::get_if<LensImaging>(&e.kind)) {
    return grid_scale(grid_quadratic_phase(g, 1.0 / (im->f - im->u), t), 1.0 - im->u / im->f, t);
  }
  const auto& fl = std::get<FourierLens>(e.kind);
  return grid_fourier_lens(g, fl.f_m, t);
}

Density2D grid_density(const GridState& g) {
  std::vector<double> v(g.amplitudes().size());
  std::transform(g.amplitudes().begin(), g.amplitudes().end(), v.begin(), [](cplx a) { return std::norm(a); });
  return Density2D{g.spec().x1, g.spec().x2, std::move(v)}.normalized();
}

std::array<Profile, 2> grid_marginals(const GridState& g) {
  const auto d = grid_density(g);
  auto p0 = d.sum_over_axis1();
  auto p1 = d.sum_over_axis0();
  for (auto& v : p0) {
    v /= g.spec().x1.pitch;
  }
  for (auto& v : p1) {
    v /= g.spec().x2.pitch;
  }
  return {Profile{g.spec().x1, std::move(p0)}, Profile{g.spec().x2, std::move(p1)}};
}

Bivariate grid_moments(const GridState& g) {
  const auto d = grid_density(g);
  double m1 = 0.0, m2 = 0.0;
  for (std::size_t i = 0; i < d.rows(); ++i) {
    for (std::size_t j = 0; j < d.cols(); ++j) {
      m1 += d(i, j) * d.axis0().coord(i);
      m2 += d(i, j) * d.axis1().coord(j);
    }
  }
  Bivariate b;
  b.mean = {m1, m2};
  for (std::size_t i = 0; i < d.rows(); ++i) {
    const double dx = d.axis0().coord(i) - m1;
    for (std::size_t j = 0; j < d.cols(); ++j) {
      const double dy = d.axis1().coord(j) - m2;
      b.var1 += d(i, j) * dx * dx;
      b.var2 += d(i, j) * dy * dy;
      b.cov12 += d(i, j) * dx * dy;
    }
  }
  return b;
}

ConditionalMoments grid_conditional(const GridState& g, double x2) {
  const Axis& a2 = g.spec().x2;
  const double pos = std::round((x2 - a2.origin) / a2.pitch);
  if (pos < 0.0 || pos > static_cast<double>(a2.n - 1)) {
    throw DomainError{"grid_conditional: conditioning value outside the grid"};
  }
  const auto j = static_cast<std::size_t>(pos);
  double w = 0.0, s = 0.0, ss = 0.0;
  for (std::size_t i = 0; i < g.n1(); ++i) {
    const double p = std::norm(g(i, j));
    const double x = g.spec().x1.coord(i);
    w += p;
    s += p * x;
    ss += p * x * x;
  }
  if (!(w > 0.0)) {
    throw DomainError{"grid_conditional: empty slice"};
  }
  const double mean = s / w;
  return {mean, std::sqrt(std::max(ss / w - mean * mean, 0.0))};
}

double grid_fedorov(const GridState& g, double x2) {
  const auto m = grid_moments(g);
  const auto c = grid_conditional(g, x2);
  if (!(c.stddev > 0.0)) {
    throw DomainError{"grid_fedorov: zero conditional width"};
  }
  return std::sqrt(m.var1) / c.stddev;
}

double grid_conditional_slope(const GridState& g) {
  // Weighted regression of column means on the column coordinate.
  double sw = 0.0, sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t j = 0; j < g.n2(); ++j) {
    double w = 0.0, m = 0.0;
    for (std::size_t i = 0; i < g.n1(); ++i) {
      const double p = std::norm(g(i, j));
      w += p;
      m += p * g.spec().x1.coord(i);
    }
    if (!(w > 0.0)) {
      continue;
    }
    m /= w;
    const double x = g.spec().x2.coord(j);
    sw += w;
    sx += w * x;
    sy += w * m;
    sxx += w * x * x;
    sxy += w * x * m;
  }
  const double den = sw * sxx - sx * sx;
  if (!(den > 0.0)) {
    throw DomainError{"grid_conditional_slope: degenerate columns"};
  }
  return (sw * sxy - sx * sy) / den;
}

Density2D rasterize(const GaussianBiphotonState& s, const GridSpec& spec) {
  std::vector<double> v(spec.x1.n * spec.x2.n);
  for (std::size_t i = 0; i < spec.x1.n; ++i) {
    for (std::size_t j = 0; j < spec.x2.n; ++j) {
      v[i * spec.x2.n + j] = s.intensity(spec.x1.coord(i), spec.x2.coord(j));
    }
  }
  return Density2D{spec.x1, spec.x2, std::move(v)}.normalized();
}

}  // namespace purephase
