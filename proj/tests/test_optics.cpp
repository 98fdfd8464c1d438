#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "oracle.hpp"
#include "purephase/errors.hpp"
#include "purephase/frames.hpp"
#include "purephase/optics.hpp"

using namespace purephase;

namespace {

const DGParams kReference{286.0, 13.0};
constexpr double kLambda = 0.81;

bool same_coefficients(const GaussianBiphotonState& a, const GaussianBiphotonState& b, double tol) {
  const double scale = std::abs(a.m11()) + std::abs(a.m22()) + std::abs(a.m12());
  return std::abs(a.m11() - b.m11()) < tol * scale && std::abs(a.m22() - b.m22()) < tol * scale &&
         std::abs(a.m12() - b.m12()) < tol * scale;
}

PrepDesign reference_design() { return PrepDesign::make(1e5, 1.5e5, 1.25e5, phase_plane_distance(kReference, kLambda)); }

OpticalElement on(ElementKind k, Photon t = Photon::both) { return OpticalElement{k, t}; }

}  // namespace

TEST_CASE("trivial elements and the Fresnel inverse") {
  const auto s = dg_state(DGParams{40.0, 8.0}, kLambda);
  CHECK(same_coefficients(apply_element(s, on(QuadraticPhase{0.0})), s, 1e-15));
  CHECK(same_coefficients(apply_element(s, on(Scale{1.0})), s, 1e-15));
  for (double z : {100.0, 5000.0, 3e4}) {
    const auto there = apply_element(s, on(Fresnel{z}));
    const auto back = apply_element(there, on(Fresnel{-z}));
    CHECK(same_coefficients(back, s, 1e-12));
    CHECK(std::abs(back.amplitude(3.0, -2.0) - s.amplitude(3.0, -2.0)) < 1e-12 * std::abs(s.amplitude(0, 0)));
  }
}

TEST_CASE("Fresnel propagation of one photon matches direct kernel quadrature") {
  const auto s = dg_state(DGParams{30.0, 6.0}, kLambda);
  const double z = 800.0;
  const double k = 2.0 * oracle::kPi / kLambda;
  const auto out = apply_element(s, on(Fresnel{z}, Photon::first));
  for (auto [x1, x2] : {std::pair{0.0, 0.0}, std::pair{10.0, 5.0}, std::pair{-20.0, 12.0}}) {
    const int n = 40000;
    const double h = 300.0, d = 2.0 * h / n;
    cplx acc = 0.0;
    for (int i = 0; i < n; ++i) {
      const double xp = -h + (i + 0.5) * d;
      acc += std::exp(cplx{0.0, k * (x1 - xp) * (x1 - xp) / (2.0 * z)}) * s.amplitude(xp, x2);
    }
    acc *= d / std::sqrt(cplx{0.0, kLambda * z});
    CHECK(std::abs(out.amplitude(x1, x2) - acc) < 1e-7 * std::abs(out.amplitude(0, 0)));
  }
}

TEST_CASE("the DG source has no amplitude correlation at z_p") {
  const double zp = phase_plane_distance(kReference, kLambda);
  const auto s = apply_element(dg_state(kReference, kLambda), on(Fresnel{zp}));
  CHECK(std::abs(fedorov_ratio(s) - 1.0) < 1e-9);
  CHECK(std::abs(s.m12().real()) < 1e-12 * std::abs(s.m11()));
  // Away from z_p the amplitude correlation returns.
  CHECK(fedorov_ratio(apply_element(dg_state(kReference, kLambda), on(Fresnel{0.5 * zp}))) > 1.1);
}

TEST_CASE("scale and quadratic phase act pointwise") {
  const auto s = dg_state(DGParams{30.0, 6.0}, kLambda);
  const auto sc = apply_element(s, on(Scale{-1.7}, Photon::second));
  const auto qp = apply_element(s, on(QuadraticPhase{2e-4}, Photon::first));
  for (auto [x1, x2] : {std::pair{3.0, 4.0}, std::pair{-8.0, 1.5}}) {
    CHECK(std::abs(sc.amplitude(x1, x2) - std::sqrt(1.7) * s.amplitude(x1, -1.7 * x2)) < 1e-14);
    const cplx phase = std::exp(cplx{0.0, -oracle::kPi * 2e-4 * x1 * x1 / kLambda});
    CHECK(std::abs(qp.amplitude(x1, x2) - phase * s.amplitude(x1, x2)) < 1e-14);
  }
}

TEST_CASE("single-lens imaging equals free space, thin lens, free space") {
  const auto s = dg_state(DGParams{50.0, 10.0}, kLambda);
  for (auto [u, f] : {std::pair{4.2e4, 1e5}, std::pair{3e5, 1e5}}) {
    const double v = u * f / (u - f);  // signed image distance, negative for a virtual image
    const std::vector<OpticalElement> explicit_chain{on(Fresnel{u}), on(ThinLens{f}), on(Fresnel{v})};
    const auto a = apply_chain(s, explicit_chain);
    const auto b = apply_element(s, on(LensImaging{u, f}));
    CHECK(same_coefficients(a, b, 1e-9));
    CHECK(std::abs(a.amplitude(5.0, 2.0)) == doctest::Approx(std::abs(b.amplitude(5.0, 2.0))).epsilon(1e-8));
  }
}

TEST_CASE("property: every element chain preserves the norm") {
  std::uniform_int_distribution<int> pick(0, 5);
  std::uniform_int_distribution<int> who(0, 2);
  for (int t = 0; t < 200; ++t) {
    auto s = dg_state(DGParams{oracle::log_uniform(20, 300), oracle::log_uniform(5, 30)}, kLambda);
    for (int e = 0; e < 4; ++e) {
      const Photon target = static_cast<Photon>(who(oracle::rng()));
      ElementKind k;
      switch (pick(oracle::rng())) {
        case 0: k = QuadraticPhase{oracle::uniform(-1e-4, 1e-4)}; break;
        case 1: k = Scale{oracle::uniform(0.3, 3.0) * (oracle::uniform(0, 1) < 0.5 ? -1 : 1)}; break;
        case 2: k = Fresnel{oracle::uniform(-5e4, 5e4)}; break;
        case 3: k = ThinLens{oracle::uniform(5e4, 2e5)}; break;
        case 4: k = LensImaging{oracle::uniform(1e4, 9e4), 1e5}; break;
        default: k = FourierLens{oracle::uniform(5e4, 2e5)}; break;
      }
      s = apply_element(s, OpticalElement{k, target});
    }
    CHECK(s.norm() == doctest::Approx(1.0).epsilon(1e-8));
  }
}

TEST_CASE("invalid elements are rejected") {
  const auto s = dg_state(kReference, kLambda);
  CHECK_THROWS_AS(apply_element(s, on(Scale{0.0})), DomainError);
  CHECK_THROWS_AS(apply_element(s, on(FourierLens{0.0})), DomainError);
  CHECK_THROWS_AS(apply_element(s, on(LensImaging{1e5, 1e5})), DomainError);
  CHECK_THROWS_AS(apply_element(s, on(LensImaging{1e4, 0.0})), DomainError);
  CHECK_THROWS_AS(apply_element(s, on(Fresnel{INFINITY})), DomainError);
}

TEST_CASE("design of the three-lens preparation") {
  const auto d = reference_design();
  CHECK(d.u() / 1e4 == doctest::Approx(4.23).epsilon(0.005));
  CHECK(std::abs(d.v()) / 1e4 == doctest::Approx(7.34).epsilon(0.005));
  CHECK(d.meff() == doctest::Approx(1.445).epsilon(0.002));
  // With the rounded z_p quoted for the experiment.
  CHECK(PrepDesign::make(1e5, 1.5e5, 1.25e5, 2.97e4).meff() == doctest::Approx(1.39).epsilon(0.03));

  CHECK_THROWS_AS(PrepDesign::make(5e4, 1.5e5, 1.25e5, 2.6e4), DesignError);  // u < 0 -> not virtual
  CHECK_THROWS_AS(PrepDesign::make(1e5, 5e4, 1.25e5, 2.884e4), DesignError);  // f2 < |v|
  CHECK_THROWS_AS(PrepDesign::make(-1e5, 1.5e5, 1.25e5, 2.884e4), DesignError);
  CHECK_THROWS_AS(PrepDesign::make(1e5, 1.5e5, 1.25e5, 0.0), DesignError);
}

TEST_CASE("prepared state is the scaled pure phase state") {
  const auto d = reference_design();
  const auto s = prepare_p3(kReference, kLambda, d);
  CHECK(std::abs(s.m11().imag()) < 1e-10 * std::abs(s.m11()));
  CHECK(std::abs(s.m22().imag()) < 1e-10 * std::abs(s.m22()));
  CHECK(std::abs(s.m12().real()) < 1e-10 * std::abs(s.m11()));
  CHECK(std::abs(fedorov_ratio(s) - 1.0) < 1e-9);
  CHECK(same_coefficients(s, expected_p3_state(kReference, kLambda, d), 1e-9));
  const auto pp = pure_phase_form(s);
  const auto exact = phase_plane_params(kReference);
  CHECK(pp.A == doctest::Approx(exact.A / (d.meff() * d.meff())).epsilon(1e-9));
  CHECK(pp.B == doctest::Approx(exact.B / (d.meff() * d.meff())).epsilon(1e-9));
  // Source and design planes must agree.
  CHECK_THROWS_AS(prepare_p3(kReference, kLambda, PrepDesign::make(1e5, 1.5e5, 1.25e5, 2.97e4)), DesignError);
  CHECK_THROWS_AS(pure_phase_form(dg_state(kReference, kLambda)), DomainError);
}

TEST_CASE("partial Fourier transform against quadrature") {
  const PurePhaseParams p{3.05e-6, 1.34e-4};
  const auto s = pure_phase_state(p, kLambda);
  const auto m = partial_fourier(s);
  const double h = 8.0 / std::sqrt(p.A);
  for (auto [q1, x2] : {std::pair{0.0, 0.0}, std::pair{0.01, -50.0}, std::pair{-0.02, 120.0}}) {
    const cplx ref = oracle::fourier_point([&](double x) { return s.amplitude(x, x2); }, q1, h, 60000);
    CHECK(std::abs(m.amplitude(q1, x2) - ref) < 1e-8 * std::abs(m.amplitude(0, 0)));
  }
  // Conditional mean of q1 at fixed x2 follows -B x2; its spread is sqrt(A).
  const auto cov = m.intensity_covariance();
  CHECK(cov.cov12 / cov.var2 == doctest::Approx(-p.B).epsilon(1e-9));
  CHECK(conditional_width(m) == doctest::Approx(std::sqrt(p.A)).epsilon(1e-9));
  // Transforming the second photon too gives the momentum form.
  const auto full = partial_fourier(m, Photon::second);
  const auto mp = momentum_params(p);
  CHECK(full.m11().real() == doctest::Approx(mp.Abar).epsilon(1e-9));
  CHECK(2.0 * full.m12().imag() == doctest::Approx(-mp.Bbar).epsilon(1e-9));
  // B = 0 separates.
  const auto sep = partial_fourier(pure_phase_state(PurePhaseParams{p.A, 0.0}, kLambda));
  CHECK(std::abs(sep.m12()) < 1e-20);
}

TEST_CASE("measurement quadratic: closed form, state route and normalization") {
  const auto q = measurement_quadratic(PurePhaseParams{1.53e-6, 65.3e-6}, 1.5e5, -0.5, kLambda);
  CHECK(q.a == doctest::Approx(8.7e-4).epsilon(0.01));
  CHECK(q.b == doctest::Approx(-2.2e-3).epsilon(0.02));
  CHECK(q.c == doctest::Approx(5.6e-3).epsilon(0.01));
  CHECK(measurement_quadratic(PurePhaseParams{1.53e-6, 0.0}, 1.5e5, -0.5, kLambda).b == 0.0);

  const auto d = reference_design();
  const auto s = prepare_p3(kReference, kLambda, d);
  for (double mm : {-3.0, -1.0, -0.5, 0.7, 2.0}) {
    const auto a = measurement_quadratic(p3_scaled_params(kReference, d), 1.5e5, mm, kLambda);
    const auto b = measure_state(s, 1.5e5, mm);
    CHECK(b.a == doctest::Approx(a.a).epsilon(1e-9));
    CHECK(b.b == doctest::Approx(a.b).epsilon(1e-9));
    CHECK(b.c == doctest::Approx(a.c).epsilon(1e-9));
    const auto cov = a.covariance();
    const double h = 8.0 * std::sqrt(std::max(cov.var1, cov.var2));
    const auto mo = oracle::moments([&](double x, double y) { return a.density(x, y); }, h, h, 1500);
    CHECK(mo.mass == doctest::Approx(1.0).epsilon(1e-4));
    CHECK(mo.cov12 == doctest::Approx(cov.cov12).epsilon(1e-3));
  }
  CHECK_THROWS_AS(measurement_quadratic(PurePhaseParams{0.0, 1e-4}, 1.5e5, -0.5, kLambda), DomainError);
  CHECK_THROWS_AS(measurement_quadratic(PurePhaseParams{1e-6, 1e-4}, 1.5e5, 0.0, kLambda), DomainError);
}

TEST_CASE("tilt angle follows the covariance eigenvectors") {
  const auto d = reference_design();
  const auto scaled = p3_scaled_params(kReference, d);
  for (int k = 0; k <= 60; ++k) {
    const double mm = -3.0 + 2.7 * k / 60.0;
    const auto q = measurement_quadratic(scaled, 1.5e5, mm, kLambda);
    const auto c = q.covariance();
    CHECK(std::abs(tilt_angle(q).degrees - oracle::minor_axis_deg(c.var1, c.var2, c.cov12)) < 1e-9);
  }
  const double th = tilt_angle(measurement_quadratic(scaled, 1.5e5, -0.5, kLambda)).magnitude();
  CHECK(th >= 66.0);
  CHECK(th <= 74.0);
  // Any positive definite form, including a < c.
  for (int t = 0; t < 500; ++t) {
    MeasurementQuadratic q;
    q.a = oracle::log_uniform(1e-5, 1e-1);
    q.c = oracle::log_uniform(1e-5, 1e-1);
    q.b = oracle::uniform(-0.99, 0.99) * std::sqrt(q.a * q.c);
    const auto c = q.covariance();
    const double want = oracle::minor_axis_deg(c.var1, c.var2, c.cov12);
    double diff = std::abs(tilt_angle(q).degrees - want);
    diff = std::min(diff, 180.0 - diff);
    CHECK(diff < 1e-9);
    const double deg = tilt_angle(q).degrees;
    CHECK(deg > -90.0);
    CHECK(deg <= 90.0);
  }
  MeasurementQuadratic axis{2e-3, 0.0, 1e-3};
  CHECK(tilt_angle(axis).degrees == 0.0);
  MeasurementQuadratic iso{1e-3, 0.0, 1e-3};
  CHECK_FALSE(tilt_angle(iso).defined);
}

TEST_CASE("principal widths") {
  MeasurementQuadratic axis{2e-3, 0.0, 5e-4};
  const auto w = principal_widths(axis);
  CHECK(w.major == doctest::Approx(1.0 / std::sqrt(2.0 * 5e-4)));
  CHECK(w.minor == doctest::Approx(1.0 / std::sqrt(2.0 * 2e-3)));

  const auto q = measurement_quadratic(p3_scaled_params(kReference, reference_design()), 1.5e5, -0.5, kLambda);
  // Rotating by theta diagonalizes the form.
  const double t = tilt_angle(q).degrees * oracle::kPi / 180.0;
  const double ct = std::cos(t), st = std::sin(t);
  const double off = (q.c - q.a) * ct * st + q.b * (ct * ct - st * st);
  CHECK(std::abs(off) < 1e-9 * (q.a + q.c));
  std::mt19937_64 rng{5};
  const auto xs = sample_rho_m(q, 1000000, rng);
  double s11 = 0, s22 = 0, s12 = 0;
  for (auto [x, y] : xs) {
    s11 += x * x;
    s22 += y * y;
    s12 += x * y;
  }
  const auto cov = q.covariance();
  CHECK(s11 / xs.size() == doctest::Approx(cov.var1).epsilon(0.01));
  CHECK(s22 / xs.size() == doctest::Approx(cov.var2).epsilon(0.01));
  CHECK(s12 / xs.size() == doctest::Approx(cov.cov12).epsilon(0.01));
  const auto pw = principal_widths(q);
  CHECK(pw.major * pw.major + pw.minor * pw.minor == doctest::Approx(cov.var1 + cov.var2).epsilon(1e-12));
}

TEST_CASE("tilt curve is monotone on each branch") {
  const auto d = reference_design();
  std::vector<double> neg, pos;
  for (int k = 0; k <= 100; ++k) {
    neg.push_back(-5.0 + 4.9 * k / 100.0);
    pos.push_back(0.1 + 4.9 * k / 100.0);
  }
  for (const auto* ms : {&neg, &pos}) {
    const auto curve = tilt_curve(kReference, kLambda, d, 1.5e5, *ms);
    REQUIRE(curve.size() == ms->size());
    const double sign = curve[1].theta_deg - curve[0].theta_deg;
    for (std::size_t i = 1; i < curve.size(); ++i) {
      CHECK((curve[i].theta_deg - curve[i - 1].theta_deg) * sign > 0.0);
    }
  }
  // Large |M_m| approaches the axis.
  const std::vector<double> far{-1000.0};
  CHECK(std::abs(tilt_curve(kReference, kLambda, d, 1.5e5, far)[0].theta_deg) < 0.1);
}
