#include "boltzslab/collision.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

namespace boltzslab {

std::string to_string(CollisionMode m) { return m == CollisionMode::ExactSum ? "exact-sum" : "subsampled"; }

CollisionMode collision_mode_from_string(const std::string& s) {
  if (s == "exact-sum") return CollisionMode::ExactSum;
  if (s == "subsampled") return CollisionMode::Subsampled;
  throw ConfigError("collision.mode must be exact-sum or subsampled, got '" + s + "'");
}

std::string to_string(ProjectionKind p) { return p == ProjectionKind::Weighted ? "weighted" : "l2"; }

ProjectionKind projection_kind_from_string(const std::string& s) {
  if (s == "weighted") return ProjectionKind::Weighted;
  if (s == "l2") return ProjectionKind::L2;
  throw ConfigError("collision.projection must be weighted or l2, got '" + s + "'");
}

CollisionConfig CollisionConfig::make(const TruncatedKernel& kernel, int n_theta, int n_azimuth) {
  CollisionConfig c;
  c.kernel = kernel;
  c.quad = SphereQuadrature::graded(kernel.theta_min(), kernel.base.theta_support, n_theta, n_azimuth);
  return c;
}

PaddedField::PaddedField(const VelocityGrid& grid, std::span<const double> f) : s_(grid.n_per_axis() + 2) {
  const int n = grid.n_per_axis();
  data_.assign(static_cast<std::size_t>(s_) * s_ * s_, 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      std::copy_n(f.data() + grid.index(i, j, 0), n, data_.data() + ((i + 1) * s_ + (j + 1)) * s_ + 1);
}

double PaddedField::interp(int i0, int i1, int i2, const int o[3], const double t[3]) const {
  const double* p = at(i0 + o[0], i1 + o[1], i2 + o[2]);
  const int S1 = s_, S0 = s_ * s_;
  const double a0 = 1.0 - t[0], a1 = 1.0 - t[1], a2 = 1.0 - t[2];
  return a0 * (a1 * (a2 * p[0] + t[2] * p[1]) + t[1] * (a2 * p[S1] + t[2] * p[S1 + 1])) +
         t[0] * (a1 * (a2 * p[S0] + t[2] * p[S0 + 1]) + t[1] * (a2 * p[S0 + S1] + t[2] * p[S0 + S1 + 1]));
}

void collision_frame(const Vec3& kappa, Vec3& e1, Vec3& e2) {
  int axis = 0;
  for (int a = 1; a < 3; ++a)
    if (std::abs(kappa[a]) < std::abs(kappa[axis])) axis = a;
  Vec3 ea = Vec3::Zero();
  ea[axis] = 1.0;
  e1 = kappa.cross(ea).normalized();
  e2 = kappa.cross(e1);
}

std::uint64_t counter_hash(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  auto mix = [](std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  };
  return mix(mix(mix(seed) ^ a) ^ b);
}

CollisionOperator::CollisionOperator(const VelocityGrid& grid, CollisionConfig cfg) : grid_(grid), cfg_(std::move(cfg)) {
  if (cfg_.mode == CollisionMode::Subsampled) {
    if (!cfg_.seed) throw ConfigError("subsampled collision mode requires collision.seed");
    if (cfg_.subsample_pairs < 1) throw ConfigError("collision.subsample_pairs must be positive");
  }
  const auto& q = cfg_.quad;
  for (int k = 0; k < q.n_theta(); ++k) {
    const double th = q.theta[k];
    const double b = cfg_.kernel.angular(th);
    if (!(b >= 0.0) || !std::isfinite(b)) throw InvariantError("collision kernel is negative or infinite on a quadrature node");
    for (int m = 0; m < q.n_azimuth(); ++m) {
      const double w = q.theta_w[k] * std::sin(th) * b * q.azimuth_w[m];
      angular_mass_ += w;
      if (w > 0.0) dirs_.push_back({std::cos(th), std::sin(th), std::cos(q.azimuth[m]), std::sin(q.azimuth[m]), w});
    }
  }
  const int n = grid_.n_per_axis();
  const int max_d2 = 3 * (n - 1) * (n - 1);
  speed_by_d2_.assign(max_d2 + 1, 0.0);
  for (int d2 = 1; d2 <= max_d2; ++d2) {
    const double s = cfg_.kernel.speed_factor(std::sqrt(static_cast<double>(d2)) * grid_.dv());
    if (!(s >= 0.0) || !std::isfinite(s)) throw InvariantError("collision kernel speed factor is negative or infinite");
    speed_by_d2_[d2] = s;
  }
}

bool CollisionOperator::make_plan(const int d[3], double speed, const Vec3& kappa, const Vec3& e1, const Vec3& e2,
                                  const Direction& dir, bool clip, PairPlan& plan) const {
  const int n = grid_.n_per_axis();
  const double half_len = 0.5 * std::sqrt(static_cast<double>(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]));
  const Vec3 omega = dir.ct * kappa + dir.st * (dir.cphi * e1 + dir.sphi * e2);
  plan.weight = dir.weight * speed;
  for (int a = 0; a < 3; ++a) {
    plan.d[a] = d[a];
    // v' - v = (v_* - v)/2 + |z|ω/2, in lattice units
    double s = 0.5 * d[a] + half_len * omega[a];
    const double r = std::round(s);
    if (std::abs(s - r) < 1e-9) s = r;
    const double s2 = d[a] - s;
    plan.o1[a] = static_cast<int>(std::floor(s));
    plan.t1[a] = s - plan.o1[a];
    plan.o2[a] = static_cast<int>(std::floor(s2));
    plan.t2[a] = s2 - plan.o2[a];
    plan.in1_lo[a] = static_cast<int>(std::ceil(-s));
    plan.in1_hi[a] = static_cast<int>(std::floor(n - 1 - s));
    plan.in2_lo[a] = static_cast<int>(std::ceil(-s2));
    plan.in2_hi[a] = static_cast<int>(std::floor(n - 1 - s2));
    int lo = std::max(0, -d[a]);
    int hi = std::min(n - 1, n - 1 - d[a]);
    if (clip) {
      lo = std::max({lo, plan.in1_lo[a], plan.in2_lo[a]});
      hi = std::min({hi, plan.in1_hi[a], plan.in2_hi[a]});
    }
    if (lo > hi) return false;
    plan.lo[a] = lo;
    plan.hi[a] = hi;
  }
  return true;
}

void CollisionOperator::for_each_plan(bool ordered, const std::function<void(const PairPlan&)>& fn,
                                      bool clip) const {
  const int n = grid_.n_per_axis();
  PairPlan plan;
  for (int a = -(n - 1); a <= n - 1; ++a)
    for (int b = -(n - 1); b <= n - 1; ++b)
      for (int c = -(n - 1); c <= n - 1; ++c) {
        if (a == 0 && b == 0 && c == 0) continue;
        if (!ordered && (a < 0 || (a == 0 && (b < 0 || (b == 0 && c < 0))))) continue;
        const double speed = speed_by_d2_[a * a + b * b + c * c];
        if (speed == 0.0) continue;
        const int d[3] = {a, b, c};
        const Vec3 kappa = -Vec3(a, b, c).normalized();
        Vec3 e1, e2;
        collision_frame(kappa, e1, e2);
        for (const auto& dir : dirs_)
          if (make_plan(d, speed, kappa, e1, e2, dir, clip, plan)) fn(plan);
      }
}

namespace {

struct Stencil {
  double w[8];
  int off[8];
  Stencil(const double t[3], int S1, int S0) {
    for (int bits = 0; bits < 8; ++bits) {
      const int b0 = (bits >> 2) & 1, b1 = (bits >> 1) & 1, b2 = bits & 1;
      w[bits] = (b0 ? t[0] : 1.0 - t[0]) * (b1 ? t[1] : 1.0 - t[1]) * (b2 ? t[2] : 1.0 - t[2]);
      off[bits] = b0 * S0 + b1 * S1 + b2;
    }
  }
  double operator()(const double* p, int c) const {
    return w[0] * p[c + off[0]] + w[1] * p[c + off[1]] + w[2] * p[c + off[2]] + w[3] * p[c + off[3]] +
           w[4] * p[c + off[4]] + w[5] * p[c + off[5]] + w[6] * p[c + off[6]] + w[7] * p[c + off[7]];
  }
};

void check_finite(std::span<const double> f) {
  for (double x : f)
    if (!std::isfinite(x)) throw DataError("collision input contains NaN or infinity");
}

}  // namespace

void CollisionOperator::exact_gain(const PaddedField& pf, const PaddedField* pg, std::span<const double> f,
                                   std::span<double> gain, std::span<double> gain_swapped, double* dissipation) const {
  const int n = grid_.n_per_axis();
  const int N = grid_.size();
  const int S1 = pf.stride1(), S0 = pf.stride0();
  std::vector<double> buf(N, 0.0), buf2(pg ? N : 0, 0.0);
  double dsum = 0.0;
  int cur[3] = {n, n, n};  // displacement whose buffer is being filled
  auto flush = [&]() {
    if (cur[0] == n) return;
    const int lo0 = std::max(0, -cur[0]), hi0 = std::min(n - 1, n - 1 - cur[0]);
    const int lo1 = std::max(0, -cur[1]), hi1 = std::min(n - 1, n - 1 - cur[1]);
    const int lo2 = std::max(0, -cur[2]), hi2 = std::min(n - 1, n - 1 - cur[2]);
    const int shift = grid_.index(cur[0], cur[1], cur[2]) - grid_.index(0, 0, 0);
    for (int i0 = lo0; i0 <= hi0; ++i0)
      for (int i1 = lo1; i1 <= hi1; ++i1)
        for (int i2 = lo2; i2 <= hi2; ++i2) {
          const int i = grid_.index(i0, i1, i2);
          gain[i] += buf[i];
          if (pg) {
            gain_swapped[i + shift] += buf2[i];
            buf2[i] = 0.0;
          } else {
            gain[i + shift] += buf[i];
          }
          buf[i] = 0.0;
        }
  };
  for_each_plan(false, [&](const PairPlan& p) {
    if (p.d[0] != cur[0] || p.d[1] != cur[1] || p.d[2] != cur[2]) {
      flush();
      std::copy_n(p.d, 3, cur);
    }
    const Stencil s1(p.t1, S1, S0), s2(p.t2, S1, S0);
    const double W = p.weight;
    const int len = p.hi[2] - p.lo[2] + 1;
    const int jshift = grid_.index(p.d[0], p.d[1], p.d[2]) - grid_.index(0, 0, 0);
    for (int i0 = p.lo[0]; i0 <= p.hi[0]; ++i0)
      for (int i1 = p.lo[1]; i1 <= p.hi[1]; ++i1) {
        const double* __restrict a = pf.at(i0 + p.o1[0], i1 + p.o1[1], p.lo[2] + p.o1[2]);
        const double* __restrict b = pf.at(i0 + p.o2[0], i1 + p.o2[1], p.lo[2] + p.o2[2]);
        const int i = grid_.index(i0, i1, p.lo[2]);
        double* __restrict out = buf.data() + i;
        if (pg) {
          const double* __restrict ga = pg->at(i0 + p.o1[0], i1 + p.o1[1], p.lo[2] + p.o1[2]);
          const double* __restrict gb = pg->at(i0 + p.o2[0], i1 + p.o2[1], p.lo[2] + p.o2[2]);
          double* __restrict out2 = buf2.data() + i;
          for (int c = 0; c < len; ++c) {
            out[c] += W * s1(a, c) * s2(gb, c);
            out2[c] += W * s2(b, c) * s1(ga, c);
          }
        } else if (dissipation) {
          const double* fi = f.data() + i;
          const double* fj = f.data() + i + jshift;
          for (int c = 0; c < len; ++c) {
            const double g = s1(a, c) * s2(b, c);
            out[c] += W * g;
            const double l = fi[c] * fj[c];
            if (g > 1e-300 && l > 1e-300) dsum += W * (g - l) * std::log(g / l);
          }
        } else {
          for (int c = 0; c < len; ++c) out[c] += W * s1(a, c) * s2(b, c);
        }
      }
  });
  flush();
  // each unordered pair stands for two ordered terms of the 1/4-weighted sum
  if (dissipation) *dissipation = 0.5 * dsum;
}

void CollisionOperator::subsampled_gain(std::span<const double> f, std::span<const double> g, std::span<double> gain,
                                        double* dissipation) const {
  const int N = grid_.size();
  const int P = cfg_.subsample_pairs;
  const std::uint64_t seed = *cfg_.seed;
  const int n_dir = static_cast<int>(dirs_.size());
  if (n_dir == 0) return;
  const double scale = static_cast<double>(N) * n_dir / P;
  double dsum = 0.0;
  for (int i = 0; i < N; ++i) {
    const Vec3& v = grid_.node(i);
    double acc = 0.0;
    for (int s = 0; s < P; ++s) {
      const int j = static_cast<int>(counter_hash(seed, i, 2 * static_cast<std::uint64_t>(s)) % N);
      const int km = static_cast<int>(counter_hash(seed, i, 2 * static_cast<std::uint64_t>(s) + 1) % n_dir);
      if (j == i) continue;
      const Vec3& vs = grid_.node(j);
      const Vec3 zv = v - vs;
      const double z = zv.norm();
      const double speed = cfg_.kernel.speed_factor(z);
      if (speed == 0.0) continue;
      const Vec3 kappa = zv / z;
      Vec3 e1, e2;
      collision_frame(kappa, e1, e2);
      const Direction& dir = dirs_[km];
      const Vec3 omega = dir.ct * kappa + dir.st * (dir.cphi * e1 + dir.sphi * e2);
      const Vec3 mid = 0.5 * (v + vs);
      const double fp = interpolate(grid_, f, mid + 0.5 * z * omega);
      const double gs = interpolate(grid_, g, mid - 0.5 * z * omega);
      const double W = dir.weight * speed;
      acc += W * fp * gs;
      if (dissipation) {
        const double gg = fp * interpolate(grid_, f, mid - 0.5 * z * omega);
        const double l = f[i] * f[j];
        if (gg > 1e-300 && l > 1e-300) dsum += W * (gg - l) * std::log(gg / l);
      }
    }
    gain[i] += scale * acc;
  }
  if (dissipation) *dissipation = 0.25 * scale * dsum;
}

std::vector<double> CollisionOperator::loss_rate(std::span<const double> g) const {
  const int n = grid_.n_per_axis();
  const int N = grid_.size();
  std::vector<double> rate(N, 0.0);
  for (int i0 = 0; i0 < n; ++i0)
    for (int i1 = 0; i1 < n; ++i1)
      for (int i2 = 0; i2 < n; ++i2) {
        double acc = 0.0;
        for (int j0 = 0; j0 < n; ++j0) {
          const int d0 = (i0 - j0) * (i0 - j0);
          for (int j1 = 0; j1 < n; ++j1) {
            const int d01 = d0 + (i1 - j1) * (i1 - j1);
            const double* gj = g.data() + grid_.index(j0, j1, 0);
            for (int j2 = 0; j2 < n; ++j2) acc += speed_by_d2_[d01 + (i2 - j2) * (i2 - j2)] * gj[j2];
          }
        }
        rate[grid_.index(i0, i1, i2)] = angular_mass_ * acc;
      }
  return rate;
}

double CollisionOperator::damping_for(std::span<const double> f) const {
  double rho = 0.0;
  for (double x : f) rho += x;
  return cfg_.kernel.damping_factor(rho * grid_.weight());
}

std::vector<double> CollisionOperator::bilinear_raw(std::span<const double> f, std::span<const double> g,
                                                    double damping) const {
  check_finite(f);
  check_finite(g);
  const int N = grid_.size();
  std::vector<double> gain(N, 0.0);
  if (cfg_.mode == CollisionMode::ExactSum) {
    const PaddedField pf(grid_, f), pg(grid_, g);
    exact_gain(pf, &pg, f, gain, gain, nullptr);
  } else {
    subsampled_gain(f, g, gain, nullptr);
  }
  const std::vector<double> rate = loss_rate(g);
  const double s = damping * grid_.weight();
  for (int i = 0; i < N; ++i) gain[i] = s * (gain[i] - f[i] * rate[i]);
  return gain;
}

std::vector<double> CollisionOperator::collide_raw(std::span<const double> f) const {
  check_finite(f);
  const int N = grid_.size();
  std::vector<double> gain(N, 0.0);
  if (cfg_.mode == CollisionMode::ExactSum) {
    const PaddedField pf(grid_, f);
    exact_gain(pf, nullptr, f, gain, {}, nullptr);
  } else {
    subsampled_gain(f, f, gain, nullptr);
  }
  const std::vector<double> rate = loss_rate(f);
  const double s = damping_for(f) * grid_.weight();
  for (int i = 0; i < N; ++i) gain[i] = s * (gain[i] - f[i] * rate[i]);
  return gain;
}

CollisionResult CollisionOperator::collide(std::span<const double> f, bool with_dissipation) const {
  check_finite(f);
  const int N = grid_.size();
  CollisionResult res;
  std::vector<double> gain(N, 0.0);
  double diss = 0.0;
  if (cfg_.mode == CollisionMode::ExactSum) {
    const PaddedField pf(grid_, f);
    exact_gain(pf, nullptr, f, gain, {}, with_dissipation ? &diss : nullptr);
  } else {
    subsampled_gain(f, f, gain, with_dissipation ? &diss : nullptr);
  }
  const std::vector<double> rate = loss_rate(f);
  double rho = 0.0, rate_max = 0.0;
  for (int i = 0; i < N; ++i) {
    rho += f[i];
    rate_max = std::max(rate_max, rate[i]);
  }
  res.density = rho * grid_.weight();
  res.damping = cfg_.kernel.damping_factor(res.density);
  const double s = res.damping * grid_.weight();
  for (int i = 0; i < N; ++i) gain[i] = s * (gain[i] - f[i] * rate[i]);
  res.loss_frequency_max = res.damping * rate_max * grid_.weight();
  res.defect_before = invariant_sums(grid_, gain) * grid_.weight();
  if (cfg_.projection == ProjectionKind::Weighted)
    res.weighted_projection = project_conservative_weighted(grid_, gain, f);
  else
    project_conservative(grid_, gain);
  res.q = std::move(gain);
  if (with_dissipation) res.dissipation = diss * grid_.weight() * grid_.weight();
  return res;
}

double CollisionOperator::dissipation(std::span<const double> f) const { return collide(f, true).dissipation; }

double CollisionOperator::loss_frequency_max(std::span<const double> f) const {
  const std::vector<double> rate = loss_rate(f);
  return damping_for(f) * *std::max_element(rate.begin(), rate.end()) * grid_.weight();
}

std::vector<double> collide_cell(const VelocityGrid& grid, std::span<const double> f, const CollisionConfig& cfg) {
  return CollisionOperator(grid, cfg).collide(f).q;
}

double dissipation_cell(const VelocityGrid& grid, std::span<const double> f, const CollisionConfig& cfg) {
  return CollisionOperator(grid, cfg).dissipation(f);
}

std::vector<CollisionResult> collide_field(const CollisionOperator& op, const DistributionField& f, int workers,
                                           bool with_dissipation) {
  if (f.n_vel != op.grid().size()) throw DataError("collide_field: field and grid sizes differ");
  std::vector<CollisionResult> out(f.n_cells);
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_lock;
  auto work = [&]() {
    for (int c = next++; c < f.n_cells; c = next++) {
      try {
        out[c] = op.collide(f.cell(c), with_dissipation);
      } catch (...) {
        const std::lock_guard<std::mutex> lock(failure_lock);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const int w = std::clamp(workers, 1, std::max(1, f.n_cells));
  if (w == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < w; ++t) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

}  // namespace boltzslab
