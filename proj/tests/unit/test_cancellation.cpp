#include "doctest.h"

#include "boltzslab/cancellation.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include <cmath>

using namespace boltzslab;

TEST_CASE("S for Maxwell molecules is constant and matches a 1-D oracle") {
  const double K = 0.8;
  const auto spec = CrossSectionSpec::inverse_power(5.0, K);
  boost::math::quadrature::tanh_sinh<double> ts;
  // b(θ) sin θ = K θ^{-3/2}; cos^{-3}(θ/2) - 1 ~ 3θ²/8 removes the singularity
  const double want = 2 * pi * ts.integrate(
                                   [&](double t) {
                                     if (t < 1e-6) return K * std::sqrt(t) * 0.375;
                                     const double c = std::cos(t / 2);
                                     return K * std::sqrt(t) * ((1.0 / (c * c * c) - 1.0) / (t * t));
                                   },
                                   0.0, pi / 2);
  for (double z : {0.2, 1.0, 40.0}) {
    const SValue s = s_of(spec, z);
    CHECK_FALSE(s.divergent);
    CHECK(s.value == doctest::Approx(want).epsilon(1e-9));
  }
}

TEST_CASE("S for hard spheres is z/2") {
  // 2π/(4π) ∫ sin θ (cos^{-4}(θ/2) - 1) dθ over (0, π/2] equals 1/2
  const auto hs = CrossSectionSpec::hard_sphere();
  CHECK(s_of(hs, 1.0).value == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(s_of(hs, 3.0).value == doctest::Approx(1.5).epsilon(1e-10));
  CHECK_THROWS_AS(s_of(CrossSectionSpec::hard_sphere(pi), 1.0), ConfigError);
}

TEST_CASE("truncated S") {
  const TruncatedKernel k(CrossSectionSpec::inverse_power(5.0, 1.0), 4);
  CHECK(s_of(k, std::sqrt(2.0) * 16.0 + 1e-9).value == 0.0);
  CHECK(std::isfinite(s_of(k, 0.3).value));
  SUBCASE("converges to the untruncated value as n grows") {
    const auto spec = CrossSectionSpec::inverse_power(5.0, 1.0);
    const double limit = s_of(spec, 1.0).value;
    double prev = 0.0;
    for (int n : {8, 16, 32, 64}) {
      const double err = std::abs(s_of(TruncatedKernel(spec, n), 1.0).value - limit);
      if (prev > 0.0) CHECK(err <= 0.5 * prev);
      prev = err;
    }
  }
  SUBCASE("breakpoint handling agrees with a brute-force kinked integral") {
    const TruncatedKernel kk(CrossSectionSpec::inverse_power(3.0, 1.0), 2);
    // z = 3.8: z/cos(θ/2) leaves [1/2, 4] at θ = 2 acos(0.95)
    const double z = 3.8;
    boost::math::quadrature::gauss_kronrod<double, 61> gk;
    auto integrand = [&](double t) {
      const double c = std::cos(t / 2);
      const double zd = z / c;
      const double dil = zd <= 4.0 ? std::pow(c, -3.0) / zd : 0.0;
      return 2 * pi * std::sin(t) * kk.base.angular(t) * (dil - 1.0 / z);
    };
    const double tb = 2 * std::acos(0.95);
    const double want = gk.integrate(integrand, 0.5, tb, 15, 1e-13) + gk.integrate(integrand, tb, pi / 2, 15, 1e-13);
    CHECK(s_of(kk, z).value == doctest::Approx(want).epsilon(1e-10));
  }
}

TEST_CASE("S growth ratios for s=5 decrease") {
  const SProfile p = s_profile(CrossSectionSpec::inverse_power(5.0, 1.0), {10.0, 30.0, 100.0});
  CHECK_FALSE(p.any_divergent);
  CHECK(p.growth_ratios[1] < p.growth_ratios[0]);
  CHECK(p.growth_ratios[2] < p.growth_ratios[1]);
}

TEST_CASE("local integrability of S") {
  SUBCASE("hard spheres: ∫ r³/2 = 1/8") {
    const LocalIntegrability li = s_local_integrability(CrossSectionSpec::hard_sphere(), 1.0);
    CHECK(li.converged);
    CHECK(li.value == doctest::Approx(0.125).epsilon(1e-8));
  }
  SUBCASE("Maxwell molecules: S r_max³/3") {
    const auto spec = CrossSectionSpec::inverse_power(5.0, 1.0);
    const LocalIntegrability li = s_local_integrability(spec, 1.0);
    CHECK(li.converged);
    CHECK(li.value == doctest::Approx(s_of(spec, 1.0).value / 3.0).epsilon(1e-8));
  }
  SUBCASE("s=3 has S ~ 1/r, still locally integrable") {
    const LocalIntegrability li = s_local_integrability(CrossSectionSpec::inverse_power(3.0, 1.0), 1.0);
    CHECK(li.converged);
  }
  SUBCASE("truncated below the speed window") {
    const LocalIntegrability li = s_local_integrability(TruncatedKernel(CrossSectionSpec::inverse_power(5.0, 1.0), 4), 0.125);
    CHECK(li.value == 0.0);
  }
}

TEST_CASE("T(phi)") {
  const TruncatedKernel k(CrossSectionSpec::inverse_power(5.0, 1.0), 8);
  const Vec3 v(1, 0, 0), vs(-1, 0, 0);
  CHECK(t_of(k, constant_function(3.0), v, vs) == 0.0);
  const TestFunction lin{[](const Vec3& x) { return 2.0 * x[0] - x[1]; }, 2.3, "linear"};
  CHECK(t_of(k, lin, v, v) == 0.0);

  SUBCASE("Gaussian against a finer brute-force sphere sum") {
    const TestFunction g{[](const Vec3& x) { return std::exp(-x.squaredNorm()); }, 2.0, "exp"};
    const Vec3 a(0.4, -0.3, 0.9), b(-0.8, 0.5, -0.2);
    boost::math::quadrature::gauss_kronrod<double, 61> gk;
    const Vec3 zv = a - b;
    const double z = zv.norm();
    const Vec3 kap = zv / z;
    const Vec3 e1 = kap.cross(Vec3(0, 1, 0)).normalized();
    const Vec3 e2 = kap.cross(e1);
    const int n_az = 80;
    const double want = gk.integrate(
        [&](double t) {
          double acc = 0.0;
          for (int m = 0; m < n_az; ++m) {
            const double ph = two_pi * m / n_az;
            const Vec3 om = std::cos(t) * kap + std::sin(t) * (std::cos(ph) * e1 + std::sin(ph) * e2);
            acc += g.eval(0.5 * (a + b) + 0.5 * z * om) - g.eval(a);
          }
          return std::sin(t) * k.base.angular(t) * acc * two_pi / n_az;
        },
        0.125, pi / 2, 15, 1e-12);
    CHECK(t_of(k, g, a, b, {64, 16}) == doctest::Approx(want).epsilon(1e-6));
    // the symmetric configuration is exact already at the default resolution
    CHECK(t_of(k, g, v, vs) ==
          doctest::Approx(0.0).scale(1.0));  // |v'|² = |z|²/4 = |v|² for every ω
  }

  SUBCASE("linearity") {
    const auto bat = standard_battery();
    const Vec3 a(0.3, 1.2, -0.5), b(-1.0, 0.1, 0.4);
    const TestFunction combo{[&](const Vec3& x) { return 2.5 * bat[0].eval(x) - 0.7 * bat[7].eval(x); }, 1.0, "combo"};
    const double lhs = t_of(k, combo, a, b);
    const double rhs = 2.5 * t_of(k, bat[0], a, b) - 0.7 * t_of(k, bat[7], a, b);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
  }
}

TEST_CASE("T bound verification") {
  const TruncatedKernel k(CrossSectionSpec::inverse_power(5.0, 1.0), 8);
  const auto pairs = sample_pairs(100, 2024);
  SUBCASE("constant battery fits C = 0") {
    const TBoundReport r = verify_t_bound(k, {constant_function(1.0)}, pairs);
    CHECK(r.fitted_C == 0.0);
    CHECK(r.violations == 0);
  }
  SUBCASE("single function and pair") {
    const auto phi = gaussian_function(Vec3(0.2, 0, 0), 1.0);
    const VelocityPair p{Vec3(1, 0.5, 0), Vec3(-0.5, 0, 0.3)};
    const double z = (p.v - p.v_star).norm();
    const TBoundReport r = verify_t_bound(k, {phi}, {p});
    const double expect = std::abs(t_of(k, phi, p.v, p.v_star)) / (phi.w2inf_norm * z * (1 + z) * m2_on_nodes(k, z));
    CHECK(r.fitted_C == doctest::Approx(expect).epsilon(1e-14));
  }
  SUBCASE("standard battery: no violations and a stable constant") {
    const TBoundReport r1 = verify_t_bound(k, standard_battery(), pairs, {32, 8});
    const TBoundReport r2 = verify_t_bound(k, standard_battery(), pairs, {64, 16});
    CHECK(r1.evaluations == 1000);
    CHECK(r1.violations == 0);
    CHECK(r2.violations == 0);
    CHECK(r1.fitted_C > 0.0);
    CHECK(std::abs(r2.fitted_C - r1.fitted_C) <= 0.2 * r1.fitted_C);
  }
  CHECK_THROWS_AS(verify_t_bound(k, {}, pairs), ConfigError);
}

TEST_CASE("test-function norms bound sampled derivatives") {
  // finite-difference check that the declared W^{2,∞} norms are upper bounds
  const double h = 1e-4;
  for (const auto& phi : standard_battery()) {
    double g_max = 0.0, h_max = 0.0, f_max = 0.0;
    for (double x = -5.0; x <= 5.0; x += 0.05) {
      const Vec3 c(x, 0.13 * x, -0.07 * x);
      const Vec3 d = Vec3(1.0, 0.13, -0.07).normalized();
      const double f0 = phi.eval(c), fp = phi.eval(c + h * d), fm = phi.eval(c - h * d);
      f_max = std::max(f_max, std::abs(f0));
      g_max = std::max(g_max, std::abs(fp - fm) / (2 * h));
      h_max = std::max(h_max, std::abs(fp - 2 * f0 + fm) / (h * h));
    }
    CHECK(f_max <= phi.w2inf_norm);
    CHECK(g_max <= phi.w2inf_norm * (1 + 1e-6));
    CHECK(h_max <= phi.w2inf_norm * (1 + 1e-4));
  }
}
