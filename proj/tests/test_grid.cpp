#include <doctest.h>

#include <cmath>
#include <string>

#include "oracle.hpp"
#include "purephase/errors.hpp"
#include "purephase/grid.hpp"

using namespace purephase;

namespace {

constexpr double kLambda = 0.81;

double amplitude_l2(const GridState& a, const GridState& b) {
  double num = 0, den = 0;
  for (std::size_t k = 0; k < a.amplitudes().size(); ++k) {
    num += std::norm(a.amplitudes()[k] - b.amplitudes()[k]);
    den += std::norm(b.amplitudes()[k]);
  }
  return std::sqrt(num / den);
}

}  // namespace

TEST_CASE("discretize: normalization, pointwise agreement and sampling errors") {
  const auto s = dg_state(DGParams{20.0, 20.0}, kLambda);
  const auto g = discretize(s, GridSpec::square(256, 2.0));
  CHECK(g.norm() == doctest::Approx(1.0).epsilon(1e-8));
  // Inside the central 4 sigma box the grid is the analytic amplitude times one constant.
  const cplx ref = g(128, 128) / s.amplitude(g.axis(0).coord(128), g.axis(1).coord(128));
  double worst = 0.0;
  for (std::size_t i = 88; i < 168; i += 3) {  // |x| < 80 = 4 sigma
    for (std::size_t j = 88; j < 168; j += 3) {
      const cplx r = g(i, j) / s.amplitude(g.axis(0).coord(i), g.axis(1).coord(j));
      worst = std::max(worst, std::abs(r - ref) / std::abs(ref));
    }
  }
  CHECK(worst < 1e-10);
  CHECK(relative_l2(grid_density(g), rasterize(s, g.spec())) < 1e-10);

  const auto wide = dg_state(DGParams{286.0, 13.0}, kLambda);
  try {
    discretize(wide, GridSpec::square(256, 8.0));
    FAIL("expected SamplingError");
  } catch (const SamplingError& e) {
    CHECK(std::string{e.what()}.find("2048") != std::string::npos);
  }
  CHECK_THROWS_AS(GridState(GridSpec::square(100, 1.0), std::vector<cplx>(10000), kLambda), SamplingError);
}

TEST_CASE("reference source on the grid: marginals and Fedorov ratio") {
  const DGParams p{286.0, 13.0};
  const auto s = dg_state(p, kLambda);
  const auto spec = adequate_spec(s);
  const auto g = discretize(s, spec);
  const auto m = grid_moments(g);
  const auto cov = s.intensity_covariance();
  CHECK(std::sqrt(m.var1) == doctest::Approx(std::sqrt(cov.var1)).epsilon(1e-3));
  CHECK(std::sqrt(m.var2) == doctest::Approx(std::sqrt(cov.var2)).epsilon(1e-3));
  CHECK(grid_fedorov(g) == doctest::Approx(11.0).epsilon(0.01));
  CHECK(grid_fedorov(g) == doctest::Approx(fedorov_ratio(s)).epsilon(1e-3));
  const auto marg = grid_marginals(g);
  for (const auto& pr : marg) {
    double total = 0.0;
    for (double v : pr.values) {
      total += v * pr.axis.pitch;
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
  }

  const auto zp = fft_fresnel(g, phase_plane_distance(p, kLambda));
  CHECK(std::abs(grid_fedorov(zp) - 1.0) < 1e-3);
}

TEST_CASE("Fresnel on the grid: identity, round trip and closed form") {
  const auto s = dg_state(DGParams{60.0, 6.0}, kLambda);
  const auto spec = adequate_spec(s);
  const auto g = discretize(s, spec);
  CHECK(amplitude_l2(fft_fresnel(g, 0.0), g) < 1e-12);
  for (double z : {2000.0, -1500.0}) {
    for (Photon t : {Photon::first, Photon::both}) {
      const auto there = fft_fresnel(g, z, t);
      CHECK(amplitude_l2(fft_fresnel(there, -z, t), g) < 1e-9);
      CHECK(there.norm() == doctest::Approx(1.0).epsilon(1e-9));
      const auto analytic = apply_element(s, OpticalElement{Fresnel{z}, t});
      CHECK(amplitude_l2(there, discretize(analytic, spec)) < 1e-6);
    }
  }
  // Far enough that the beam leaves the window.
  CHECK_THROWS_AS(fft_fresnel(g, 1e7), SamplingError);
}

TEST_CASE("phase, scale and Fourier lens on the grid agree with closed form") {
  const auto s = apply_element(dg_state(DGParams{50.0, 8.0}, kLambda), OpticalElement{Fresnel{3000.0}});
  const auto spec = adequate_spec(s);
  const auto g = discretize(s, spec);
  const auto qp = grid_quadratic_phase(g, 3e-5, Photon::second);
  CHECK(amplitude_l2(qp, discretize(apply_element(s, OpticalElement{QuadraticPhase{3e-5}, Photon::second}), spec)) <
        1e-12);
  const auto sc = grid_scale(g, -2.0, Photon::first);
  const auto sc_ref = apply_element(s, OpticalElement{Scale{-2.0}, Photon::first});
  CHECK(relative_l2(grid_density(sc), rasterize(sc_ref, sc.spec())) < 1e-10);

  const auto fl = grid_fourier_lens(g, 1.5e5);
  const auto fl_ref = apply_element(s, OpticalElement{FourierLens{1.5e5}, Photon::first});
  CHECK(fl.norm() == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(relative_l2(grid_density(fl), rasterize(fl_ref, fl.spec())) < 1e-6);
  // Phase included: compare amplitudes against the closed form on the relabeled axes.
  cplx num = 0;
  double den = 0;
  for (std::size_t i = 0; i < fl.n1(); i += 7) {
    for (std::size_t j = 0; j < fl.n2(); j += 7) {
      const cplx a = fl_ref.amplitude(fl.axis(0).coord(i), fl.axis(1).coord(j));
      num += std::norm(fl(i, j) - a);
      den += std::norm(a);
    }
  }
  CHECK(std::sqrt(std::abs(num) / den) < 1e-6);
}

TEST_CASE("partial Fourier transform on the grid") {
  const PurePhaseParams pp{3.05e-6, 1.34e-4};
  const auto s = pure_phase_state(pp, kLambda);
  const auto spec = adequate_spec(s);
  const auto g = discretize(s, spec);
  const auto m = grid_pft(g);
  CHECK(m.norm() == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(grid_conditional_slope(m) == doctest::Approx(-pp.B).epsilon(0.01));
  const auto analytic = partial_fourier(s);
  CHECK(relative_l2(grid_density(m), rasterize(analytic, m.spec())) < 1e-6);
  const auto c = grid_conditional(m, 0.0);
  CHECK(c.stddev == doctest::Approx(std::sqrt(pp.A)).epsilon(0.01));

  // B = 0 separates into a product of its marginals.
  const auto sep = grid_pft(discretize(pure_phase_state(PurePhaseParams{pp.A, 0.0}, kLambda), spec));
  const auto d = grid_density(sep);
  const auto r = d.sum_over_axis1();
  const auto col = d.sum_over_axis0();
  double worst = 0.0, peak = 0.0;
  for (std::size_t i = 0; i < d.rows(); ++i) {
    for (std::size_t j = 0; j < d.cols(); ++j) {
      worst = std::max(worst, std::abs(d(i, j) - r[i] * col[j]));
      peak = std::max(peak, d(i, j));
    }
  }
  CHECK(worst < 1e-9 * peak);
}

TEST_CASE("product state has Fedorov ratio one") {
  const auto s = GaussianBiphotonState::normalized(cplx{1e-3, 0.0}, cplx{4e-3, 0.0}, cplx{0.0, 0.0}, kLambda);
  const auto g = discretize(s, adequate_spec(s));
  CHECK(std::abs(grid_fedorov(g) - 1.0) < 1e-6);
  CHECK(std::abs(grid_fedorov(g, 20.0) - 1.0) < 1e-6);
}

TEST_CASE("property: grid scalars converge under pitch halving") {
  for (const DGParams p : {DGParams{40.0, 4.0}, DGParams{90.0, 3.0}}) {
    const auto s = dg_state(p, kLambda);
    const auto spec = adequate_spec(s);
    const auto fine = GridSpec::square(spec.x1.n * 2, spec.x1.pitch / 2);
    const double f1 = grid_fedorov(discretize(s, spec));
    const double f2 = grid_fedorov(discretize(s, fine));
    CHECK(std::abs(f1 - f2) < 1e-2);
    const auto z = phase_plane_distance(p, kLambda);
    const double z1 = grid_fedorov(fft_fresnel(discretize(s, spec), z));
    const double z2 = grid_fedorov(fft_fresnel(discretize(s, fine), z));
    CHECK(std::abs(z1 - z2) < 1e-2);
  }
}

TEST_CASE("sampling requirement scales with the state") {
  const auto a = sampling_requirement(dg_state(DGParams{40.0, 4.0}, kLambda));
  const auto b = sampling_requirement(dg_state(DGParams{80.0, 8.0}, kLambda));
  CHECK(b.max_pitch == doctest::Approx(2.0 * a.max_pitch).epsilon(1e-9));
  CHECK(b.min_extent == doctest::Approx(2.0 * a.min_extent).epsilon(1e-9));
  CHECK(a.min_n == b.min_n);
  const auto spec = adequate_spec(dg_state(DGParams{40.0, 4.0}, kLambda));
  CHECK(spec.x1.pitch <= a.max_pitch);
  CHECK(static_cast<double>(spec.x1.n) * spec.x1.pitch >= a.min_extent);
}
