#include "doctest.h"

#include "boltzslab/collision.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>

using namespace boltzslab;

namespace {

// Straightforward ordered sum over (v, v_*, θ, φ) with interpolate() at the
// primed velocities. Deliberately shares nothing with the displacement plans.
struct BruteForce {
  const VelocityGrid& g;
  const CollisionConfig& cfg;

  void frame(const Vec3& k, Vec3& e1, Vec3& e2) const {
    const Vec3 a = k.cwiseAbs();
    Vec3 axis = Vec3::UnitX();
    if (a[1] < a[0] && a[1] <= a[2]) axis = Vec3::UnitY();
    if (a[2] < a[0] && a[2] < a[1]) axis = Vec3::UnitZ();
    e1 = k.cross(axis).normalized();
    e2 = k.cross(e1);
  }

  template <class Fn>
  void each(Fn fn) const {
    for (int i = 0; i < g.size(); ++i)
      for (int j = 0; j < g.size(); ++j) {
        const Vec3 zv = g.node(i) - g.node(j);
        const double z = zv.norm();
        if (z == 0.0 || !cfg.kernel.in_speed_window(z)) continue;
        const Vec3 k = zv / z;
        Vec3 e1, e2;
        frame(k, e1, e2);
        const Vec3 mid = 0.5 * (g.node(i) + g.node(j));
        for (int t = 0; t < cfg.quad.n_theta(); ++t)
          for (int m = 0; m < cfg.quad.n_azimuth(); ++m) {
            const double th = cfg.quad.theta[t], ph = cfg.quad.azimuth[m];
            const Vec3 om = std::cos(th) * k + std::sin(th) * (std::cos(ph) * e1 + std::sin(ph) * e2);
            const double w = cfg.quad.theta_w[t] * cfg.quad.azimuth_w[m] * std::sin(th) *
                             eval_truncated_theta(cfg.kernel, z, th);
            fn(i, j, w, mid + 0.5 * z * om, mid - 0.5 * z * om);
          }
      }
  }

  std::vector<double> raw(std::span<const double> f, std::span<const double> h, double damping) const {
    std::vector<double> q(g.size(), 0.0);
    each([&](int i, int j, double w, const Vec3& vp, const Vec3& vsp) {
      q[i] += w * (interpolate(g, f, vp) * interpolate(g, h, vsp) - f[i] * h[j]);
    });
    for (auto& x : q) x *= damping * g.weight();
    return q;
  }

  double dissipation(std::span<const double> f) const {
    double d = 0.0;
    each([&](int i, int j, double w, const Vec3& vp, const Vec3& vsp) {
      const double G = interpolate(g, f, vp) * interpolate(g, f, vsp), L = f[i] * f[j];
      if (G > 1e-300 && L > 1e-300) d += w * (G - L) * std::log(G / L);
    });
    return 0.25 * d * g.weight() * g.weight();
  }
};

double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

std::vector<double> random_field(const VelocityGrid& g, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(0.1, 1.0);
  const auto M = maxwellian(1.0, Vec3(0.2, 0, -0.1), 1.2, g);
  std::vector<double> f(g.size());
  for (int i = 0; i < g.size(); ++i) f[i] = M[i] * U(rng);
  return f;
}

CollisionConfig small_config(int n_level = 4, bool damping = true) {
  auto cfg = CollisionConfig::make(TruncatedKernel(CrossSectionSpec::inverse_power(5.0, 1.0), n_level, damping), 8, 8);
  return cfg;
}

}  // namespace

TEST_CASE("zero field") {
  const VelocityGrid g(6, 3.0);
  const CollisionOperator op(g, small_config());
  const std::vector<double> zero(g.size(), 0.0);
  CHECK(max_abs(op.collide(zero).q) == 0.0);
  CHECK(op.dissipation(zero) == 0.0);
}

TEST_CASE("exact sum against the brute-force oracle on 6^3") {
  const VelocityGrid g(6, 3.0);
  for (double s : {5.0, 3.0}) {
    auto cfg = CollisionConfig::make(TruncatedKernel(CrossSectionSpec::inverse_power(s, 0.7), 4), 8, 8);
    const CollisionOperator op(g, cfg);
    const BruteForce bf{g, cfg};
    SUBCASE("two-node distribution") {
      std::vector<double> f(g.size(), 0.0);
      f[g.index(1, 2, 3)] = 0.8;
      f[g.index(4, 3, 2)] = 1.3;
      const auto want = bf.raw(f, f, op.damping_for(f));
      const auto got = op.collide_raw(f);
      const double scale = max_abs(want);
      REQUIRE(scale > 0.0);
      for (int i = 0; i < g.size(); ++i) CHECK(std::abs(got[i] - want[i]) <= 1e-12 * scale);
    }
    SUBCASE("random positive field") {
      const auto f = random_field(g, 9);
      const auto want = bf.raw(f, f, op.damping_for(f));
      const auto got = op.collide_raw(f);
      const double scale = max_abs(want);
      for (int i = 0; i < g.size(); ++i) CHECK(std::abs(got[i] - want[i]) <= 1e-12 * scale);
      const double d = op.dissipation(f);
      CHECK(d == doctest::Approx(bf.dissipation(f)).epsilon(1e-12));
    }
    SUBCASE("bilinear form") {
      const auto f = random_field(g, 3), h = random_field(g, 4);
      const auto want = bf.raw(f, h, 1.0);
      const auto got = op.bilinear_raw(f, h);
      const double scale = max_abs(want);
      for (int i = 0; i < g.size(); ++i) CHECK(std::abs(got[i] - want[i]) <= 1e-12 * scale);
    }
  }
}

TEST_CASE("bilinearity without damping") {
  const VelocityGrid g(6, 3.0);
  const CollisionOperator op(g, small_config(4, false));
  const auto f = random_field(g, 1), h = random_field(g, 2);
  std::vector<double> s(g.size());
  for (int i = 0; i < g.size(); ++i) s[i] = f[i] + h[i];
  const auto qs = op.collide_raw(s), qf = op.collide_raw(f), qh = op.collide_raw(h);
  const auto qfh = op.bilinear_raw(f, h), qhf = op.bilinear_raw(h, f);
  const double scale = max_abs(qs);
  for (int i = 0; i < g.size(); ++i) CHECK(std::abs(qs[i] - qf[i] - qh[i] - qfh[i] - qhf[i]) <= 1e-13 * scale);
}

TEST_CASE("conservation after projection") {
  const VelocityGrid g(8, 4.0);
  for (auto proj : {ProjectionKind::Weighted, ProjectionKind::L2}) {
    auto cfg = small_config(8);
    cfg.projection = proj;
    const CollisionOperator op(g, cfg);
    const auto f = random_field(g, 17);
    const CollisionResult r = op.collide(f);
    double l1 = 0.0;
    for (double x : r.q) l1 += std::abs(x);
    const auto sums = invariant_sums(g, r.q);
    for (int a = 0; a < 5; ++a) CHECK(std::abs(sums[a]) <= 1e-13 * l1);
    CHECK(r.weighted_projection == (proj == ProjectionKind::Weighted));
    CHECK(r.defect_before.cwiseAbs().maxCoeff() > 0.0);
  }
}

TEST_CASE("reflection symmetry v -> -v") {
  const VelocityGrid g(8, 4.0);
  const CollisionOperator op(g, small_config(8));
  const auto f = random_field(g, 23);
  std::vector<double> fr(g.size());
  for (int i = 0; i < g.size(); ++i) fr[g.mirror(i)] = f[i];
  const auto q = op.collide_raw(f), qr = op.collide_raw(fr);
  const double scale = max_abs(q);
  for (int i = 0; i < g.size(); ++i) CHECK(std::abs(qr[g.mirror(i)] - q[i]) <= 1e-12 * scale);
}

TEST_CASE("Maxwellian residual and dissipation shrink under refinement") {
  double prev_q = 1e300, prev_d = 1e300;
  for (auto [n, nt] : {std::pair{8, 8}, std::pair{12, 12}}) {
    const VelocityGrid g(n, 6.0);
    const CollisionOperator op(g, CollisionConfig::make(TruncatedKernel(CrossSectionSpec::inverse_power(5.0, 1.0), 8), nt, 8));
    const auto M = maxwellian(1.0, Vec3::Zero(), 1.0, g);
    const CollisionResult r = op.collide(M, true);
    double qn = 0.0, mn = 0.0;
    for (int i = 0; i < g.size(); ++i) {
      qn += std::abs(r.q[i]);
      mn += M[i];
    }
    const double rel = qn / mn;
    MESSAGE("n=" << n << " |Q(M,M)|/|M| = " << rel << "  D(M) = " << r.dissipation);
    CHECK(rel < prev_q);
    CHECK(std::abs(r.dissipation) < prev_d);
    prev_q = rel;
    prev_d = std::abs(r.dissipation);
  }
}

TEST_CASE("dissipation sign on random fields") {
  const VelocityGrid g(6, 3.0);
  const auto cfg = small_config(4);
  const CollisionOperator op(g, cfg);
  for (std::uint64_t seed : {5u, 6u, 7u}) {
    const auto f = random_field(g, seed);
    double scale = 0.0;
    BruteForce{g, cfg}.each([&](int i, int j, double w, const Vec3&, const Vec3&) { scale += w * f[i] * f[j]; });
    CHECK(op.dissipation(f) >= -1e-12 * scale * g.weight() * g.weight());
  }
}

TEST_CASE("collide_field") {
  const VelocityGrid g(6, 3.0);
  const CollisionOperator op(g, small_config());
  DistributionField field(3, g.size());
  const auto f = random_field(g, 31);
  for (int c = 0; c < 3; ++c)
    for (int i = 0; i < g.size(); ++i) field.at(c, i) = f[i];
  const auto single = collide_cell(g, f, small_config());
  const auto res1 = collide_field(op, field, 1);
  const auto res3 = collide_field(op, field, 3);
  for (int c = 0; c < 3; ++c) {
    CHECK(res1[c].q == single);
    CHECK(res3[c].q == res1[c].q);
  }
  field.at(1, 4) = std::nan("");
  CHECK_THROWS_AS(collide_field(op, field, 2), DataError);
}

TEST_CASE("subsampled mode") {
  const VelocityGrid g(6, 3.0);
  auto cfg = small_config();
  cfg.mode = CollisionMode::Subsampled;
  CHECK_THROWS_AS(CollisionOperator(g, cfg), ConfigError);
  cfg.seed = 42;
  cfg.subsample_pairs = 20000;
  const CollisionOperator sub(g, cfg);
  const auto f = random_field(g, 8);
  const auto a = sub.collide(f).q, b = sub.collide(f).q;
  CHECK(a == b);
  // unbiased estimator of the exact gain: close on a small lattice with many samples
  const auto exact = CollisionOperator(g, small_config()).collide_raw(f);
  const auto est = sub.collide_raw(f);
  double num = 0.0, den = 0.0;
  for (int i = 0; i < g.size(); ++i) {
    num += std::abs(est[i] - exact[i]);
    den += std::abs(exact[i]);
  }
  CHECK(num / den < 0.1);
  cfg.seed = 43;
  CHECK(CollisionOperator(g, cfg).collide(f).q != a);
}

TEST_CASE("loss frequency and damping") {
  const VelocityGrid g(6, 3.0);
  const CollisionOperator op(g, small_config(4));
  const auto M = maxwellian(2.0, Vec3::Zero(), 1.0, g);
  const double rho = moments(g, M).mass;
  CHECK(op.damping_for(M) == doctest::Approx(1.0 / (1.0 + rho / 4.0)));
  // Maxwell molecules: loss frequency is angular mass times density at the centre
  CHECK(op.loss_frequency_max(M) <= op.damping_for(M) * op.angular_mass() * rho * (1 + 1e-12));
  CHECK(op.loss_frequency_max(M) > 0.5 * op.damping_for(M) * op.angular_mass() * rho);
}

TEST_CASE("timing of the reference configuration" * doctest::skip(std::getenv("BOLTZSLAB_TIMING") == nullptr)) {
  const VelocityGrid g(12, 6.0);
  const CollisionOperator op(g, CollisionConfig::make(TruncatedKernel(CrossSectionSpec::inverse_power(5.0, 1.0), 8), 16, 8));
  const auto M = maxwellian(1.0, Vec3(0.1, 0, 0), 1.0, g);
  auto t0 = std::chrono::steady_clock::now();
  op.collide(M);
  auto t1 = std::chrono::steady_clock::now();
  op.collide(M, true);
  auto t2 = std::chrono::steady_clock::now();
  std::printf("collide %.3f s, with dissipation %.3f s\n", std::chrono::duration<double>(t1 - t0).count(),
              std::chrono::duration<double>(t2 - t1).count());
}
