#include "boltzslab/solver.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <future>
#include <iomanip>
#include <limits>
#include <sstream>

namespace boltzslab {

std::string to_string(DtPolicy p) { return p == DtPolicy::Fixed ? "fixed" : "auto"; }

DtPolicy dt_policy_from_string(const std::string& s) {
  if (s == "fixed") return DtPolicy::Fixed;
  if (s == "auto" || s == "cfl-auto") return DtPolicy::Auto;
  throw ConfigError("unknown dt policy '" + s + "' (expected fixed or auto)");
}

void RunConfig::validate(const Problem& p) const {
  if (!(horizon > 0.0) || !std::isfinite(horizon)) throw ConfigError("run.horizon must be positive");
  if (!(stability > 0.0)) throw ConfigError("run.stability must be positive");
  if (capture_stride < 1) throw ConfigError("run.capture_stride must be >= 1");
  if (workers < 1) throw ConfigError("workers must be >= 1");
  for (double t : snapshot_times)
    if (!(t >= 0.0) || t > horizon) throw ConfigError("snapshot times must lie in [0, horizon]");
  if (dt_policy == DtPolicy::Fixed) {
    if (!(dt > 0.0)) throw ConfigError("fixed dt policy needs run.dt > 0");
    if (!homogeneous) {
      const double limit = cfl_limit(p.grid, p.mesh);
      if (dt > limit * (1.0 + 1e-12)) throw CflViolation(dt, limit);
    }
  }
  if (!homogeneous) p.boundary.validate(p.grid);
}

LedgerCheck check_row(const CaptureRow& first, const CaptureRow& row) {
  LedgerCheck c;
  const double m0 = first.mass;
  const double ms = m0 > 0.0 ? m0 : 1.0;
  c.mass = std::abs(row.mass + row.mass_out - first.mass - row.mass_in) / ms;
  const double ps = std::max(ms, first.momentum.norm());
  c.momentum = (row.momentum + row.momentum_out - first.momentum - row.momentum_in).cwiseAbs() / ps;
  const double es = first.energy > 0.0 ? first.energy : 1.0;
  c.energy = std::abs(row.energy + row.energy_out - first.energy - row.energy_in) / es;
  c.entropy_excess = row.H_rel + row.entropy_flux_out + row.D_integral - first.H_rel - row.entropy_flux_in;
  return c;
}

namespace {

bool all_finite(const DistributionField& f) {
  return std::all_of(f.values.begin(), f.values.end(), [](double x) { return std::isfinite(x); });
}

[[noreturn]] void nan_abort(const DistributionField& f, const VelocityGrid& grid, int step, const std::string& phase,
                            const std::string& dump_dir) {
  std::string where;
  if (!dump_dir.empty()) {
    std::filesystem::create_directories(dump_dir);
    const auto path = std::filesystem::path(dump_dir) / ("nan_step_" + std::to_string(step) + ".csv");
    std::ofstream os(path);
    os << "cell,v1,v2,v3,f\n" << std::setprecision(17);
    for (int c = 0; c < f.n_cells; ++c)
      for (int i = 0; i < f.n_vel; ++i) {
        const Vec3& v = grid.node(i);
        os << c << ',' << v[0] << ',' << v[1] << ',' << v[2] << ',' << f.at(c, i) << '\n';
      }
    where = " (field dumped to " + path.string() + ")";
  }
  throw DataError("non-finite density after " + phase + " at step " + std::to_string(step) + ", t = " +
                  std::to_string(f.time) + where);
}

struct LocalBalance {
  double mass = 0.0, momentum = 0.0;
};

// Finite-volume balance of every cell over one transport phase, rebuilt from
// the upwind face values; relative to the cell's own term sizes.
LocalBalance local_balance(const VelocityGrid& grid, const SlabMesh& mesh, const DistributionField& before,
                           const DistributionField& after, const TraceRecord& tr) {
  const int C = mesh.n_cells, N = grid.size();
  const double dx = mesh.dx(), dt = tr.dt, w = grid.weight();
  LocalBalance out;
  for (int c = 0; c < C; ++c) {
    double m = 0.0, ms = 0.0;
    Vec3 p = Vec3::Zero();
    double psc = 0.0;
    for (int i = 0; i < N; ++i) {
      const Vec3& v = grid.node(i);
      const double v1 = v[0];
      double left, right;  // upwind values on the faces c-1/2 and c+1/2
      if (v1 > 0.0) {
        left = c == 0 ? tr.left_in[i] : before.at(c - 1, i);
        right = before.at(c, i);
      } else {
        left = before.at(c, i);
        right = c == C - 1 ? tr.right_in[i] : before.at(c + 1, i);
      }
      const double change = (after.at(c, i) - before.at(c, i)) * dx;
      const double flux = dt * v1 * (right - left);
      m += change + flux;
      ms += std::abs(after.at(c, i) * dx) + std::abs(before.at(c, i) * dx) + std::abs(dt * v1 * right) +
            std::abs(dt * v1 * left);
      p += (change + flux) * v;
      psc += (std::abs(after.at(c, i) * dx) + std::abs(before.at(c, i) * dx) + std::abs(dt * v1 * right) +
              std::abs(dt * v1 * left)) *
             v.norm();
    }
    if (ms > 0.0) out.mass = std::max(out.mass, std::abs(m * w) / (ms * w));
    if (psc > 0.0) out.momentum = std::max(out.momentum, p.norm() * w / (psc * w));
  }
  return out;
}

class Stepper {
 public:
  Stepper(const Problem& p, const RunConfig& cfg)
      : p_(p),
        cfg_(cfg),
        mesh_(cfg.homogeneous ? SlabMesh(1.0, 1) : p.mesh),
        op_(p.grid, p.collision),
        M_(reference_maxwellian(p.grid)) {}

  RunHistory run(const DistributionField& initial, const std::function<void(const CaptureRow&)>& on_capture) {
    if (initial.n_vel != p_.grid.size() || initial.n_cells != mesh_.n_cells)
      throw DataError("run: initial field does not match the grid and mesh");
    if (!all_finite(initial)) throw DataError("run: initial field is not finite");
    f_ = initial;
    f_.time = 0.0;
    hist_.log.initial = f_;
    std::vector<double> targets = cfg_.snapshot_times;
    targets.push_back(cfg_.horizon);
    std::sort(targets.begin(), targets.end());
    targets.erase(std::unique(targets.begin(), targets.end()), targets.end());
    hist_.snapshots.push_back(f_);
    capture(on_capture);
    first_ = hist_.rows.front();
    H_prev_ = first_.H_rel;

    const double tol = 1e-12 * cfg_.horizon;
    std::size_t next = 0;
    while (next < targets.size() && targets[next] <= tol) ++next;
    int step = 0;
    bool captured_last = true;
    while (next < targets.size()) {
      const double t = f_.time;
      double dt = step_size(targets[next] - t);
      const bool lands = t + dt >= targets[next] - tol;
      const double t_end = lands ? targets[next] : t + dt;
      dt = t_end - t;
      take_step(dt, step);
      f_.time = t_end;
      ++step;
      steps_done_ = step;
      captured_last = false;
      if (step % cfg_.capture_stride == 0) {
        capture(on_capture);
        captured_last = true;
      }
      if (lands) {
        if (targets[next] != cfg_.horizon) hist_.snapshots.push_back(f_);
        ++next;
      }
    }
    if (!captured_last) capture(on_capture);
    hist_.snapshots.push_back(f_);
    hist_.final_state = f_;
    hist_.log.final_state = f_;
    hist_.summary.steps = step;
    summarize();
    return std::move(hist_);
  }

 private:
  double step_size(double remaining) {
    if (cfg_.dt_policy == DtPolicy::Fixed) return std::min(cfg_.dt, remaining);
    double dt = remaining;
    if (!cfg_.homogeneous) dt = std::min(dt, cfl_limit(p_.grid, mesh_));
    if (cfg_.collisions) {
      const double L = loss_bound();
      if (L > 0.0) dt = std::min(dt, cfg_.stability / L);
    }
    return dt;
  }

  double loss_bound() const {
    double L = 0.0;
    for (int c = 0; c < f_.n_cells; ++c) L = std::max(L, op_.loss_frequency_max(f_.cell(c)));
    return L;
  }

  // One output step; a fixed dt above the collision bound is cut into 2^k pieces.
  void take_step(double dt, int step) {
    int pieces = 1;
    if (cfg_.collisions && cfg_.dt_policy == DtPolicy::Fixed) {
      const double L = loss_bound();
      while (L > 0.0 && dt / pieces > cfg_.stability / L && pieces < (1 << 20)) {
        pieces *= 2;
        ++hist_.summary.halvings;
      }
    }
    const double h = dt / pieces;
    const double t0 = f_.time;
    double D_int = 0.0;
    for (int k = 0; k < pieces; ++k) {
      f_.time = t0 + k * h;
      if (!cfg_.homogeneous) transport_half(0.5 * h, step);
      if (cfg_.collisions) D_int += collision(h, step);
      if (!cfg_.homogeneous) transport_half(0.5 * h, step);
      else f_.time = t0 + (k + 1) * h;
      if (cfg_.homogeneous) {
        const double H = relative_entropy(p_.grid, mesh_, f_, M_);
        const double inc = H - H_prev_;
        const double scale = std::abs(first_.H_rel) > 0.0 ? std::abs(first_.H_rel) : 1.0;
        hist_.summary.max_H_increase = std::max(hist_.summary.max_H_increase, inc / scale);
        if (inc > 1e-10 * scale) hist_.summary.H_monotone = false;
        H_prev_ = H;
      }
    }
    D_integral_ += D_int;
    last_D_ = dt > 0.0 ? D_int / dt : 0.0;
    last_dt_ = dt;
    auto& s = hist_.summary;
    s.dt_min = s.dt_min == 0.0 ? h : std::min(s.dt_min, h);
    s.dt_max = std::max(s.dt_max, h);
  }

  void transport_half(double dt, int step) {
    PhaseRecord rec;
    rec.kind = PhaseRecord::Kind::Transport;
    rec.time = f_.time;
    rec.dt = dt;
    rec.before = f_;
    TransportResult r = transport_step(f_, p_.grid, mesh_, p_.boundary, dt);
    if (!all_finite(f_)) nan_abort(f_, p_.grid, step, "transport", cfg_.dump_dir);
    const LocalBalance lb = local_balance(p_.grid, mesh_, rec.before, f_, r.trace);
    hist_.summary.max_local_mass_residual = std::max(hist_.summary.max_local_mass_residual, lb.mass);
    hist_.summary.max_local_momentum_residual = std::max(hist_.summary.max_local_momentum_residual, lb.momentum);
    hist_.ledger += r.flux;
    if (cfg_.store_phases) {
      rec.trace = std::move(r.trace);
      hist_.log.phases.push_back(std::move(rec));
    }
  }

  // Explicit midpoint f + dt Q(f + dt/2 Q(f)); returns ∫ D over the step.
  double collision(double dt, int step) {
    const VelocityGrid& g = p_.grid;
    const int N = g.size();
    const double dx = mesh_.dx();
    const DistributionField before = f_;
    const std::vector<CollisionResult> r1 = collide_field(op_, f_, cfg_.workers, true);
    double D = 0.0;
    for (int c = 0; c < f_.n_cells; ++c) D += dx * r1[c].damping * r1[c].dissipation;
    DistributionField mid = f_;
    for (int c = 0; c < f_.n_cells; ++c)
      for (int i = 0; i < N; ++i) mid.at(c, i) += 0.5 * dt * r1[c].q[i];
    const std::vector<CollisionResult> r2 = collide_field(op_, mid, cfg_.workers, false);
    double dH = 0.0;
    for (int c = 0; c < f_.n_cells; ++c) {
      std::span<double> fc = f_.cell(c);
      std::vector<double> orig(fc.begin(), fc.end());
      for (int i = 0; i < N; ++i) fc[i] += dt * r2[c].q[i];
      clamp_cell(fc, dx);
      dH += dx * (relative_entropy(g, fc, M_) - relative_entropy(g, orig, M_));
    }
    if (!all_finite(f_)) nan_abort(f_, g, step, "collision", cfg_.dump_dir);
    collision_entropy_error_ += std::abs(dH + dt * D);
    if (cfg_.store_phases) {
      PhaseRecord rec;
      rec.kind = PhaseRecord::Kind::Collision;
      rec.time = f_.time;
      rec.dt = dt;
      rec.increment.resize(f_.values.size());
      for (std::size_t k = 0; k < f_.values.size(); ++k) rec.increment[k] = f_.values[k] - before.values[k];
      rec.before = before;
      hist_.log.phases.push_back(std::move(rec));
    }
    return dt * D;
  }

  // Negative values go to 0; the clamp's invariant moments are handed back
  // through a weighted correction so the ledgers stay exact.
  void clamp_cell(std::span<double> fc, double dx) {
    const VelocityGrid& g = p_.grid;
    const int N = g.size();
    std::vector<double> q(N, 0.0);
    bool any = false;
    for (int i = 0; i < N; ++i)
      if (fc[i] < 0.0) {
        q[i] = -fc[i];
        clamp_mass_ += -fc[i] * g.weight() * dx;
        clamp_energy_ += -fc[i] * g.speed2(i) * g.weight() * dx;
        fc[i] = 0.0;
        any = true;
      }
    if (!any) return;
    // fc is orig + q; the weighted projection turns q into q - fc·p with zero
    // invariant moments, so the result fc - fc·p keeps those of orig
    const std::vector<double> w(fc.begin(), fc.end()), q0 = q;
    project_conservative_weighted(g, q, w);
    for (int i = 0; i < N; ++i) fc[i] += q[i] - q0[i];
  }

  void capture(const std::function<void(const CaptureRow&)>& on_capture) {
    CaptureRow row;
    row.t = f_.time;
    row.step = steps_done_;
    const Moments m = moments(p_.grid, mesh_, f_);
    row.mass = m.mass;
    row.momentum = m.momentum;
    row.energy = m.energy;
    row.H_rel = relative_entropy(p_.grid, mesh_, f_, M_);
    row.D = last_D_;
    row.D_integral = D_integral_;
    const FaceFlux tot = hist_.ledger.total();
    row.mass_in = tot.mass_in;
    row.mass_out = tot.mass_out;
    row.momentum_in = tot.momentum_in;
    row.momentum_out = tot.momentum_out;
    row.energy_in = tot.energy_in;
    row.energy_out = tot.energy_out;
    row.entropy_flux_in = tot.entropy_in;
    row.entropy_flux_out = tot.entropy_out;
    row.clamp_mass = clamp_mass_;
    row.clamp_energy = clamp_energy_;
    row.collision_entropy_error = collision_entropy_error_;
    hist_.rows.push_back(row);
    if (on_capture) on_capture(row);
  }

  void summarize() {
    auto& s = hist_.summary;
    double emax = 0.0;
    for (auto& row : hist_.rows) {
      const LedgerCheck c = check_row(first_, row);
      s.max_mass_residual = std::max(s.max_mass_residual, c.mass);
      s.max_momentum_residual = s.max_momentum_residual.cwiseMax(c.momentum);
      s.max_energy_residual = std::max(s.max_energy_residual, c.energy);
      s.max_entropy_excess = std::max(s.max_entropy_excess, c.entropy_excess);
      emax = std::max(emax, row.energy);
    }
    s.clamp_energy_ratio = emax > 0.0 ? clamp_energy_ / emax : 0.0;
    s.collision_entropy_error = collision_entropy_error_;
  }

  const Problem& p_;
  const RunConfig& cfg_;
  SlabMesh mesh_;
  CollisionOperator op_;
  std::vector<double> M_;
  DistributionField f_;
  RunHistory hist_;
  CaptureRow first_;
  double H_prev_ = 0.0;
  int steps_done_ = 0;
  double D_integral_ = 0.0, last_D_ = 0.0, last_dt_ = 0.0;
  double clamp_mass_ = 0.0, clamp_energy_ = 0.0;
  double collision_entropy_error_ = 0.0;
};

}  // namespace

DistributionField mollify_initial(const DistributionField& f0, const VelocityGrid& grid, const SlabMesh& mesh, int n) {
  if (n < 1) throw ConfigError("mollify_initial: n must be >= 1");
  if (f0.n_vel != grid.size() || f0.n_cells != mesh.n_cells) throw DataError("mollify_initial: field/grid mismatch");
  const int np = grid.n_per_axis(), N = grid.size();
  double bound = 0.0;
  for (int c = 0; c < f0.n_cells; ++c) {
    const double x = mesh.center(c);
    for (int i = 0; i < N; ++i) {
      const double v = f0.at(c, i);
      if (!(v >= 0.0)) throw ConfigError("initial data must be finite and nonnegative");
      bound += v * (1.0 + x * x + grid.speed2(i) + std::abs(std::log(v > 0.0 ? v : 1.0)));
    }
  }
  if (!std::isfinite(bound)) throw ConfigError("initial data has a non-finite moment/entropy bound");

  DistributionField out(f0.n_cells, N);
  const double vmax2 = grid.v_max() * grid.v_max();
  std::vector<double> a(N), b(N);
  // 1-D pass of [1 2 1]/4 along one axis, weights renormalised at the edges
  auto pass = [&](const std::vector<double>& in, std::vector<double>& o, int axis) {
    for (int i = 0; i < np; ++i)
      for (int j = 0; j < np; ++j)
        for (int k = 0; k < np; ++k) {
          int idx[3] = {i, j, k};
          const int at = idx[axis];
          double s = 2.0 * in[grid.index(i, j, k)], w = 2.0;
          for (int d : {-1, 1}) {
            if (at + d < 0 || at + d >= np) continue;
            idx[axis] = at + d;
            s += in[grid.index(idx[0], idx[1], idx[2])];
            w += 1.0;
          }
          o[grid.index(i, j, k)] = s / w;
        }
  };
  const double L = mesh.length;
  for (int c = 0; c < f0.n_cells; ++c) {
    for (int i = 0; i < N; ++i) {
      const double v = f0.at(c, i);
      a[i] = grid.speed2(i) <= vmax2 ? std::min(v, static_cast<double>(n)) : 0.0;
    }
    pass(a, b, 0);
    pass(b, a, 1);
    pass(a, b, 2);
    const double xc = mesh.center(c) - 0.5 * L;
    for (int i = 0; i < N; ++i) out.at(c, i) = b[i] + std::exp(-0.5 * xc * xc - 0.5 * grid.speed2(i)) / n;
  }
  return out;
}

RunHistory run(const Problem& p, const RunConfig& cfg, const DistributionField& initial,
               const std::function<void(const CaptureRow&)>& on_capture) {
  cfg.validate(p);
  Stepper s(p, cfg);
  return s.run(initial, on_capture);
}

double l1_distance(const VelocityGrid& grid, const SlabMesh& mesh, const DistributionField& a,
                   const DistributionField& b) {
  if (a.values.size() != b.values.size()) throw DataError("l1_distance: fields differ in shape");
  double s = 0.0;
  for (std::size_t k = 0; k < a.values.size(); ++k) s += std::abs(a.values[k] - b.values[k]);
  return s * grid.weight() * mesh.dx();
}

SweepReport n_sweep(const Problem& p, const RunConfig& cfg, const DistributionField& f0,
                    const std::vector<int>& levels) {
  if (levels.size() < 3) throw ConfigError("n_sweep needs at least three levels");
  const SlabMesh mesh = cfg.homogeneous ? SlabMesh(1.0, 1) : p.mesh;
  const int per_level = std::max(1, cfg.workers / static_cast<int>(levels.size()));

  auto run_level = [&](int n) {
    Problem q = p;
    CollisionConfig cc = CollisionConfig::make(TruncatedKernel(p.collision.kernel.base, n, p.collision.kernel.damping),
                                               p.collision.quad.n_theta(), p.collision.quad.n_azimuth());
    cc.mode = p.collision.mode;
    cc.subsample_pairs = p.collision.subsample_pairs;
    cc.seed = p.collision.seed;
    cc.projection = p.collision.projection;
    q.collision = cc;
    RunConfig rc = cfg;
    rc.workers = per_level;
    rc.store_phases = false;
    return run(q, rc, mollify_initial(f0, p.grid, mesh, n));
  };
  std::vector<std::future<RunHistory>> futs;
  for (int n : levels) futs.push_back(std::async(std::launch::async, run_level, n));
  std::vector<RunHistory> runs;
  for (auto& f : futs) runs.push_back(f.get());

  SweepReport rep;
  std::vector<double> times = cfg.snapshot_times;
  times.push_back(cfg.horizon);
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());
  rep.times = times;

  double gauss_v = 0.0, gauss_x = 0.0;
  for (int i = 0; i < p.grid.size(); ++i) gauss_v += std::exp(-0.5 * p.grid.speed2(i)) * p.grid.weight();
  for (int c = 0; c < mesh.n_cells; ++c) {
    const double xc = mesh.center(c) - 0.5 * mesh.length;
    gauss_x += std::exp(-0.5 * xc * xc) * mesh.dx();
  }
  for (std::size_t k = 0; k < levels.size(); ++k)
    rep.levels.push_back({levels[k], truncated_angular_mass(p.collision.kernel.base, levels[k]),
                          gauss_v * gauss_x / levels[k], runs[k].summary});

  auto at_time = [&](const RunHistory& h, double t) -> const DistributionField& {
    for (const auto& s : h.snapshots)
      if (std::abs(s.time - t) <= 1e-12 * std::max(1.0, cfg.horizon)) return s;
    throw InvariantError("n_sweep: no snapshot at t = " + std::to_string(t));
  };
  for (std::size_t k = 0; k + 1 < levels.size(); ++k) {
    std::vector<double> row;
    for (double t : times) row.push_back(l1_distance(p.grid, mesh, at_time(runs[k], t), at_time(runs[k + 1], t)));
    rep.distances.push_back(row);
  }
  return rep;
}

}  // namespace boltzslab
