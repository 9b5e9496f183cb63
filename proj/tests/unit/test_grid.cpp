#include "doctest.h"

#include "boltzslab/grid.hpp"

#include <cmath>
#include <random>

using namespace boltzslab;

TEST_CASE("velocity lattice layout") {
  const VelocityGrid g(12, 6.0);
  CHECK(g.size() == 1728);
  CHECK(g.dv() == doctest::Approx(1.0));
  for (int i = 0; i < g.size(); ++i) {
    CHECK((g.node(i) + g.node(g.mirror(i))).norm() < 1e-14);
    CHECK(g.node(i).cwiseAbs().maxCoeff() < 6.0);
    CHECK(std::abs(g.node(i)[0]) > 0.0);  // even lattice skips v1 = 0
  }
  CHECK_THROWS_AS(VelocityGrid(1, 6.0), ConfigError);
  CHECK_THROWS_AS(VelocityGrid(8, -1.0), ConfigError);
  CHECK_THROWS_AS(SlabMesh(0.0, 3), ConfigError);
}

TEST_CASE("sphere quadrature") {
  const auto q = SphereQuadrature::graded(0.125, pi / 2, 16, 8);
  CHECK(q.n_theta() == 16);
  double s = 0.0, a = 0.0;
  for (int i = 0; i < q.n_theta(); ++i) {
    CHECK(q.theta_w[i] > 0.0);
    s += q.theta_w[i] * std::sin(q.theta[i]);
  }
  for (double w : q.azimuth_w) a += w;
  CHECK(a == doctest::Approx(two_pi));
  CHECK(s == doctest::Approx(std::cos(0.125)).epsilon(1e-9));
  CHECK(SphereQuadrature::graded(1.0, 0.9, 8, 8).n_theta() == 0);
  CHECK(SphereQuadrature::graded(0.1, 1.0, 6, 4).n_theta() == 6);
}

TEST_CASE("interpolation") {
  const VelocityGrid g(8, 4.0);
  std::vector<double> affine(g.size()), constant(g.size(), 2.5);
  const Vec3 a(0.3, -1.2, 0.7);
  for (int i = 0; i < g.size(); ++i) affine[i] = 20.0 + a.dot(g.node(i));
  CHECK(interpolate(g, affine, g.node(77)) == affine[77]);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> U(-3.5, 3.5);
  for (int r = 0; r < 200; ++r) {
    const Vec3 v(U(rng), U(rng), U(rng));
    CHECK(interpolate(g, affine, v) == doctest::Approx(20.0 + a.dot(v)).epsilon(1e-12));
    CHECK(interpolate(g, constant, v) == doctest::Approx(2.5).epsilon(1e-14));
  }
  CHECK(interpolate(g, constant, Vec3(3.6, 0.0, 0.0)) == 0.0);
  CHECK(interpolate(g, constant, Vec3(3.5, 3.5, -3.5)) == doctest::Approx(2.5));
  std::vector<double> neg(g.size(), -1.0);
  CHECK(interpolate(g, neg, Vec3(0.1, 0.2, 0.3)) == 0.0);
}

TEST_CASE("moments") {
  const VelocityGrid g(12, 6.0);
  std::vector<double> zero(g.size(), 0.0);
  const Moments m0 = moments(g, zero);
  CHECK(m0.mass == 0.0);
  CHECK(m0.entropy == 0.0);
  std::vector<double> one = zero;
  one[100] = 3.0;
  const Moments m1 = moments(g, one);
  CHECK(m1.mass == doctest::Approx(3.0 * g.weight()));
  CHECK(m1.entropy == doctest::Approx(3.0 * std::log(3.0) * g.weight()));

  SUBCASE("Maxwellian mass converges to 1") {
    double prev = 1.0;
    for (int n : {8, 12, 16}) {
      const VelocityGrid gn(n, 6.0);
      const Moments m = moments(gn, maxwellian(1.0, Vec3::Zero(), 1.0, gn));
      // lattice error plus the |v_i| > 6 tail: 1 - erf(6/sqrt2)^3
      const double tail = 1.0 - std::pow(std::erf(6.0 / std::sqrt(2.0)), 3);
      const double err = std::abs(m.mass - (1.0 - tail));
      CHECK(err < prev);
      prev = err;
      CHECK(m.momentum.norm() < 1e-15);
    }
    CHECK(prev < 1e-8);
  }
  SUBCASE("drifting Maxwellian") {
    const Moments m = moments(g, maxwellian(1.0, Vec3(0.3, 0, 0), 1.0, g));
    CHECK(m.mass == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(m.momentum[0] == doctest::Approx(0.3).epsilon(1e-6));
    CHECK(std::abs(m.momentum[1]) < 1e-14);
    CHECK(m.energy == doctest::Approx(3.0 + 0.09).epsilon(1e-5));
  }
  SUBCASE("even fields have exactly zero momentum") {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    std::vector<double> f(g.size());
    for (int i = 0; i < g.size(); ++i) f[i] = U(rng);
    for (int i = 0; i < g.size(); ++i) f[g.mirror(i)] = f[i];
    CHECK(moments(g, f).momentum.norm() == 0.0);
  }
  CHECK(maxwellian(1.0, Vec3::Zero(), 1.0, g)[0] > 0.0);
  CHECK(maxwellian(0.0, Vec3::Zero(), 1.0, g)[5] == 0.0);
  CHECK_THROWS_AS(maxwellian(1.0, Vec3::Zero(), 0.0, g), ConfigError);
  const VelocityGrid odd(3, 1.5);
  CHECK(maxwellian(1.0, Vec3::Zero(), 1.0, odd)[odd.index(1, 1, 1)] == doctest::Approx(std::pow(two_pi, -1.5)));
}

TEST_CASE("conservative projection") {
  const VelocityGrid g(10, 5.0);
  std::mt19937_64 rng(11);
  std::normal_distribution<double> N(0.0, 1.0);
  std::vector<double> q(g.size());
  for (auto& x : q) x = N(rng);
  auto l2 = [](const std::vector<double>& x) {
    double s = 0.0;
    for (double y : x) s += y * y;
    return std::sqrt(s);
  };
  auto l1 = [](const std::vector<double>& x) {
    double s = 0.0;
    for (double y : x) s += std::abs(y);
    return s;
  };
  std::vector<double> p = q;
  project_conservative(g, p);
  const auto sums = invariant_sums(g, p);
  for (int a = 0; a < 5; ++a) CHECK(std::abs(sums[a]) <= 1e-13 * l1(q) * (a == 4 ? 25.0 : 5.0));
  std::vector<double> diff(g.size());
  for (int i = 0; i < g.size(); ++i) diff[i] = p[i] - q[i];
  CHECK(l2(diff) <= l2(q));

  // idempotent
  std::vector<double> pp = p;
  project_conservative(g, pp);
  for (int i = 0; i < g.size(); ++i) CHECK(pp[i] == doctest::Approx(p[i]).epsilon(1e-12).scale(1.0));

  std::vector<double> M = maxwellian(1.0, Vec3::Zero(), 1.0, g);
  std::vector<double> Mp = M;
  project_conservative(g, Mp);
  const auto ms = invariant_sums(g, Mp);
  CHECK(ms.cwiseAbs().maxCoeff() <= 1e-13 * l2(M) * 25.0 / g.weight());

  SUBCASE("weighted projection keeps corrections where the weight lives") {
    std::vector<double> w = M;
    std::vector<double> r = q;
    for (int i = 0; i < g.size(); ++i) r[i] *= M[i];
    std::vector<double> rw = r;
    CHECK(project_conservative_weighted(g, rw, w));
    const auto s = invariant_sums(g, rw);
    CHECK(s.cwiseAbs().maxCoeff() <= 1e-13 * l1(r) * 25.0);
    // the far corner only moves in proportion to the tiny weight there
    double rmax = 0.0;
    for (double x : r) rmax = std::max(rmax, std::abs(x));
    CHECK(std::abs(rw[0] - r[0]) <= 1e-10 * rmax);
    std::vector<double> zero_w(g.size(), 0.0);
    std::vector<double> fallback = q;
    CHECK_FALSE(project_conservative_weighted(g, fallback, zero_w));
    CHECK(invariant_sums(g, fallback).cwiseAbs().maxCoeff() <= 1e-12 * l1(q) * 25.0);
  }
}

TEST_CASE("relative entropy and moment-matched Maxwellian") {
  const VelocityGrid g(12, 6.0);
  const auto M = reference_maxwellian(g);
  CHECK(relative_entropy(g, M, M) == doctest::Approx(0.0).scale(1.0));
  std::vector<double> zero(g.size(), 0.0);
  CHECK(relative_entropy(g, zero, M) == doctest::Approx(1.0).epsilon(1e-6));

  const auto hot = maxwellian(0.8, Vec3(0.2, -0.1, 0.0), 1.4, g);
  const auto mm = moment_matched_maxwellian(g, hot);
  CHECK(l1_distance(g, hot, mm) < 1e-8);
  std::vector<double> bimodal(g.size());
  const auto a = maxwellian(0.5, Vec3(1.0, 0, 0), 0.7, g);
  const auto b = maxwellian(0.5, Vec3(-1.0, 0, 0), 0.7, g);
  for (int i = 0; i < g.size(); ++i) bimodal[i] = a[i] + b[i];
  const auto mb = moment_matched_maxwellian(g, bimodal);
  const Moments x = moments(g, bimodal), y = moments(g, mb);
  CHECK(y.mass == doctest::Approx(x.mass).epsilon(1e-12));
  CHECK(y.energy == doctest::Approx(x.energy).epsilon(1e-11));
  CHECK(y.entropy < x.entropy + 1e-12);  // Maxwellian minimizes ∫ f log f at fixed moments

  SlabMesh mesh(1.0, 4);
  DistributionField f(4, g.size());
  for (int c = 0; c < 4; ++c)
    for (int i = 0; i < g.size(); ++i) f.at(c, i) = M[i];
  CHECK(moments(g, mesh, f).mass == doctest::Approx(moments(g, M).mass));
}
