#include "boltzslab/transport.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

namespace boltzslab {

namespace {

int node_of(const VelocityGrid& grid, const Vec3& v) {
  int idx[3];
  for (int a = 0; a < 3; ++a) {
    const double u = (v[a] + grid.v_max()) / grid.dv() - 0.5;
    const double r = std::round(u);
    if (std::abs(u - r) > 1e-6 || r < 0 || r >= grid.n_per_axis())
      throw ConfigError("inflow table velocity is not a lattice node");
    idx[a] = static_cast<int>(r);
  }
  return grid.index(idx[0], idx[1], idx[2]);
}

}  // namespace

InflowTable InflowTable::from_rows(const std::vector<std::array<double, 5>>& rows, const VelocityGrid& grid) {
  std::map<double, std::vector<double>> by_time;
  for (const auto& r : rows) {
    for (double x : r)
      if (!std::isfinite(x)) throw ConfigError("inflow table: nonfinite entry");
    if (r[4] < 0.0) throw ConfigError("inflow table: negative g");
    auto& slice = by_time[r[0]];
    if (slice.empty()) slice.assign(grid.size(), 0.0);
    slice[node_of(grid, Vec3(r[1], r[2], r[3]))] = r[4];
  }
  if (by_time.empty()) throw ConfigError("inflow table: no rows");
  InflowTable t;
  for (auto& [time, slice] : by_time) {
    t.times_.push_back(time);
    t.slices_.push_back(std::move(slice));
  }
  return t;
}

InflowTable InflowTable::from_csv(const std::string& path, const VelocityGrid& grid) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open inflow table " + path);
  std::vector<std::array<double, 5>> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ss(line);
    std::array<double, 5> r{};
    int k = 0;
    while (k < 5 && ss >> r[k]) ++k;
    if (k != 5) {
      if (rows.empty() && lineno == 1) continue;  // header
      throw ConfigError(path + ":" + std::to_string(lineno) + ": expected t, v1, v2, v3, g");
    }
    rows.push_back(r);
  }
  return from_rows(rows, grid);
}

std::vector<double> InflowTable::at(double t) const {
  if (t <= times_.front()) return slices_.front();
  if (t >= times_.back()) return slices_.back();
  const auto it = std::upper_bound(times_.begin(), times_.end(), t);
  const std::size_t k = static_cast<std::size_t>(it - times_.begin());
  const double a = (t - times_[k - 1]) / (times_[k] - times_[k - 1]);
  std::vector<double> out(slices_[k].size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = (1.0 - a) * slices_[k - 1][i] + a * slices_[k][i];
  return out;
}

FaceInflow FaceInflow::maxwellian(const MaxwellianWall& w) {
  if (!(w.rho >= 0.0) || !(w.T > 0.0)) throw ConfigError("wall Maxwellian needs rho >= 0 and T > 0");
  FaceInflow f;
  f.mode = Mode::Maxwellian;
  f.wall = w;
  return f;
}

FaceInflow FaceInflow::tabulated(std::shared_ptr<const InflowTable> t) {
  if (!t) throw ConfigError("tabulated inflow without a table");
  FaceInflow f;
  f.mode = Mode::Tabulated;
  f.table = std::move(t);
  return f;
}

std::vector<double> FaceInflow::values(const VelocityGrid& grid, double t) const {
  if (mode == Mode::Tabulated) {
    auto v = table->at(t);
    if (static_cast<int>(v.size()) != grid.size()) throw ConfigError("inflow table built for another lattice");
    return v;
  }
  return boltzslab::maxwellian(wall.rho, wall.u, wall.T, grid);
}

namespace {

// Σ over incoming nodes of g(1 + |v|² + |log g|)|v1| dv³ for one face.
double face_budget(const VelocityGrid& grid, const std::vector<double>& g, double sign) {
  double s = 0.0;
  for (int i = 0; i < grid.size(); ++i) {
    const double v1 = grid.node(i)[0];
    if (sign * v1 <= 0.0) continue;
    const double gi = g[i];
    if (gi < 0.0 || !std::isfinite(gi)) throw ConfigError("inflow data must be finite and nonnegative");
    const double lg = gi > 0.0 ? std::abs(std::log(gi)) : 0.0;
    s += gi * (1.0 + grid.speed2(i) + lg) * std::abs(v1);
  }
  return s * grid.weight();
}

}  // namespace

void BoundaryData::validate(const VelocityGrid& grid) const {
  const double b = face_budget(grid, left.values(grid, 0.0), 1.0) + face_budget(grid, right.values(grid, 0.0), -1.0);
  if (check_entropy_bound && !std::isfinite(b)) throw ConfigError("inflow entropy bound is not finite");
}

FaceFlux& FaceFlux::operator+=(const FaceFlux& o) {
  mass_in += o.mass_in;
  mass_out += o.mass_out;
  momentum_in += o.momentum_in;
  momentum_out += o.momentum_out;
  energy_in += o.energy_in;
  energy_out += o.energy_out;
  entropy_in += o.entropy_in;
  entropy_out += o.entropy_out;
  flogf_in += o.flogf_in;
  flogf_out += o.flogf_out;
  abslog_in += o.abslog_in;
  abslog_out += o.abslog_out;
  weighted_in += o.weighted_in;
  weighted_out += o.weighted_out;
  return *this;
}

FaceFlux FluxLedger::total() const {
  FaceFlux t = left;
  t += right;
  return t;
}

FluxLedger& FluxLedger::operator+=(const FluxLedger& o) {
  left += o.left;
  right += o.right;
  phases += o.phases;
  return *this;
}

double cfl_limit(const VelocityGrid& grid, const SlabMesh& mesh) { return mesh.dx() / grid.v_max(); }

namespace {

void add_flux(FaceFlux& ff, bool incoming, double value, const Vec3& v, double v2, double w, double M) {
  const double m = value * w;
  const double lg = value > 0.0 ? std::log(value) : 0.0;
  const double h = M > 0.0 ? h_entropy(value / M) * M : 0.0;
  if (incoming) {
    ff.mass_in += m;
    ff.momentum_in += m * v;
    ff.energy_in += m * v2;
    ff.entropy_in += h * w;
    ff.flogf_in += m * lg;
    ff.abslog_in += m * std::abs(lg);
    ff.weighted_in += m * (1.0 + v2);
  } else {
    ff.mass_out += m;
    ff.momentum_out += m * v;
    ff.energy_out += m * v2;
    ff.entropy_out += h * w;
    ff.flogf_out += m * lg;
    ff.abslog_out += m * std::abs(lg);
    ff.weighted_out += m * (1.0 + v2);
  }
}

}  // namespace

TransportResult transport_step(DistributionField& f, const VelocityGrid& grid, const SlabMesh& mesh,
                               const BoundaryData& bdata, double dt) {
  const double limit = cfl_limit(grid, mesh);
  if (!(dt > 0.0)) throw ConfigError("transport_step: dt must be positive");
  if (dt > limit * (1.0 + 1e-12)) throw CflViolation(dt, limit);
  if (f.n_vel != grid.size() || f.n_cells != mesh.n_cells) throw DataError("transport_step: field/grid mismatch");

  const int C = mesh.n_cells, N = grid.size();
  const double dx = mesh.dx();
  const double tmid = f.time + 0.5 * dt;
  const std::vector<double> gl = bdata.left.values(grid, tmid), gr = bdata.right.values(grid, tmid);
  const std::vector<double> M = reference_maxwellian(grid);

  TransportResult res;
  res.flux.phases = 1;
  TraceRecord& tr = res.trace;
  tr.time = f.time;
  tr.dt = dt;
  tr.left_out.assign(N, 0.0);
  tr.right_out.assign(N, 0.0);
  tr.left_in.assign(N, 0.0);
  tr.right_in.assign(N, 0.0);

  std::vector<double> col(C);
  for (int i = 0; i < N; ++i) {
    const Vec3& v = grid.node(i);
    const double v1 = v[0], v2 = grid.speed2(i);
    const double lam = std::abs(v1) * dt / dx;
    const double w = std::abs(v1) * grid.weight() * dt;
    for (int c = 0; c < C; ++c) col[c] = f.at(c, i);
    if (v1 > 0.0) {
      const double g = gl[i];
      tr.left_in[i] = g;
      tr.right_out[i] = col[C - 1];
      add_flux(res.flux.left, true, g, v, v2, w, M[i]);
      add_flux(res.flux.right, false, col[C - 1], v, v2, w, M[i]);
      for (int c = C - 1; c >= 1; --c) f.at(c, i) = col[c] - lam * (col[c] - col[c - 1]);
      f.at(0, i) = col[0] - lam * (col[0] - g);
    } else {
      const double g = gr[i];
      tr.right_in[i] = g;
      tr.left_out[i] = col[0];
      add_flux(res.flux.right, true, g, v, v2, w, M[i]);
      add_flux(res.flux.left, false, col[0], v, v2, w, M[i]);
      for (int c = 0; c < C - 1; ++c) f.at(c, i) = col[c] - lam * (col[c] - col[c + 1]);
      f.at(C - 1, i) = col[C - 1] - lam * (col[C - 1] - g);
    }
  }
  f.time += dt;
  return res;
}

int EvolutionLog::transport_phases() const {
  return static_cast<int>(std::count_if(phases.begin(), phases.end(),
                                        [](const PhaseRecord& p) { return p.kind == PhaseRecord::Kind::Transport; }));
}

Renormalizer identity_renormalizer() {
  return {[](double f) { return f; }, [](double) { return 1.0; }, "identity"};
}

double WeakFormTerms::scale() const {
  return std::abs(end_minus_start) + std::abs(transport) + std::abs(source) + std::abs(outflow) + std::abs(inflow);
}

namespace {

double integral(const VelocityGrid& grid, const SlabMesh& mesh, const DistributionField& f, const Renormalizer& beta,
                const SlabTestFunction& psi) {
  double s = 0.0;
  for (int c = 0; c < mesh.n_cells; ++c) {
    const double x = mesh.center(c);
    for (int i = 0; i < grid.size(); ++i) s += beta.beta(f.at(c, i)) * psi.psi(x, grid.node(i));
  }
  return s * mesh.dx() * grid.weight();
}

}  // namespace

WeakFormTerms weak_form_terms(const VelocityGrid& grid, const SlabMesh& mesh, const EvolutionLog& log,
                              const Renormalizer& beta, const SlabTestFunction& psi, WeakPairing pairing) {
  WeakFormTerms t;
  const double dx = mesh.dx(), w = grid.weight(), L = mesh.length;
  const int N = grid.size();
  t.end_minus_start = integral(grid, mesh, log.final_state, beta, psi) - integral(grid, mesh, log.initial, beta, psi);
  for (const PhaseRecord& p : log.phases) {
    if (p.before.n_vel != N || p.before.n_cells != mesh.n_cells) throw DataError("evolution log does not match the grid");
    if (p.kind == PhaseRecord::Kind::Transport) {
      const TraceRecord& tr = p.trace;
      if (static_cast<int>(tr.left_out.size()) != N) throw DataError("transport phase without a trace record");
      double inner = 0.0, out = 0.0, in = 0.0;
      const int C = mesh.n_cells;
      if (pairing == WeakPairing::Discrete) {
        for (int i = 0; i < N; ++i) {
          const Vec3& v = grid.node(i);
          const double a = std::abs(v[0]);
          const double psi_first = psi.psi(mesh.center(0), v), psi_last = psi.psi(mesh.center(C - 1), v);
          double prev = psi_first;
          for (int c = 0; c + 1 < C; ++c) {
            const double next = psi.psi(mesh.center(c + 1), v);
            const double up = v[0] > 0.0 ? p.before.at(c, i) : p.before.at(c + 1, i);
            inner += beta.beta(up) * v[0] * (next - prev) / dx;
            prev = next;
          }
          if (v[0] > 0.0) {
            in += beta.beta(tr.left_in[i]) * psi_first * a;
            out += beta.beta(tr.right_out[i]) * psi_last * a;
          } else {
            in += beta.beta(tr.right_in[i]) * psi_last * a;
            out += beta.beta(tr.left_out[i]) * psi_first * a;
          }
        }
        t.transport += p.dt * inner * dx * w;
        t.outflow += p.dt * out * w;
        t.inflow += p.dt * in * w;
        continue;
      }
      for (int c = 0; c < mesh.n_cells; ++c) {
        const double x = mesh.center(c);
        for (int i = 0; i < N; ++i) {
          const Vec3& v = grid.node(i);
          inner += beta.beta(p.before.at(c, i)) * v[0] * psi.dpsi_dx(x, v);
        }
      }
      for (int i = 0; i < N; ++i) {
        const Vec3& v = grid.node(i);
        const double a = std::abs(v[0]);
        if (v[0] > 0.0) {
          in += beta.beta(tr.left_in[i]) * psi.psi(0.0, v) * a;
          out += beta.beta(tr.right_out[i]) * psi.psi(L, v) * a;
        } else {
          in += beta.beta(tr.right_in[i]) * psi.psi(L, v) * a;
          out += beta.beta(tr.left_out[i]) * psi.psi(0.0, v) * a;
        }
      }
      t.transport += p.dt * inner * dx * w;
      t.outflow += p.dt * out * w;
      t.inflow += p.dt * in * w;
    } else {
      if (p.increment.size() != p.before.values.size()) throw DataError("collision phase without an increment");
      double s = 0.0;
      for (int c = 0; c < mesh.n_cells; ++c) {
        const double x = mesh.center(c);
        for (int i = 0; i < N; ++i) {
          const std::size_t k = static_cast<std::size_t>(c) * N + i;
          s += beta.dbeta(p.before.values[k]) * p.increment[k] * psi.psi(x, grid.node(i));
        }
      }
      t.source += s * dx * w;
    }
  }
  return t;
}

GreenReport green_identity_check(const VelocityGrid& grid, const SlabMesh& mesh, const EvolutionLog& log,
                                 const FluxLedger& ledger, const Renormalizer& beta,
                                 const std::vector<SlabTestFunction>& battery) {
  if (ledger.phases != log.transport_phases())
    throw DataError("ledger covers " + std::to_string(ledger.phases) + " transport phases, log has " +
                    std::to_string(log.transport_phases()));
  GreenReport rep;
  // the ledger mass fluxes must be reproducible from the stored traces
  double in = 0.0, out = 0.0;
  for (const PhaseRecord& p : log.phases) {
    if (p.kind != PhaseRecord::Kind::Transport) continue;
    for (int i = 0; i < grid.size(); ++i) {
      const double a = std::abs(grid.node(i)[0]) * grid.weight() * p.dt;
      in += (p.trace.left_in[i] + p.trace.right_in[i]) * a;
      out += (p.trace.left_out[i] + p.trace.right_out[i]) * a;
    }
  }
  const FaceFlux tot = ledger.total();
  rep.ledger_mismatch = std::abs(in - tot.mass_in) + std::abs(out - tot.mass_out);
  for (const auto& psi : battery) {
    const WeakFormTerms t = weak_form_terms(grid, mesh, log, beta, psi);
    rep.labels.push_back(psi.label);
    rep.residuals.push_back(t.residual());
    rep.scales.push_back(t.scale());
    rep.max_abs_residual = std::max(rep.max_abs_residual, std::abs(t.residual()));
  }
  return rep;
}

std::vector<SlabTestFunction> default_green_battery(const SlabMesh& mesh) {
  const double L = mesh.length;
  return {
      {[](double, const Vec3&) { return 1.0; }, [](double, const Vec3&) { return 0.0; }, "one"},
      {[L](double x, const Vec3&) { return 4.0 * x * (L - x) / (L * L); },
       [L](double x, const Vec3&) { return 4.0 * (L - 2.0 * x) / (L * L); }, "x(L-x)"},
  };
}

double inflow_entropy_budget(const BoundaryData& bdata, const VelocityGrid& grid, double horizon) {
  if (!(horizon > 0.0)) throw ConfigError("inflow_entropy_budget: horizon must be positive");
  const bool steady =
      bdata.left.mode == FaceInflow::Mode::Maxwellian && bdata.right.mode == FaceInflow::Mode::Maxwellian;
  int samples = 1;
  if (!steady) {
    std::size_t rows = 0;
    for (const FaceInflow* fi : {&bdata.left, &bdata.right})
      if (fi->table) rows = std::max(rows, fi->table->times().size());
    samples = std::max<int>(64, 4 * static_cast<int>(rows));
  }
  double total = 0.0;
  const double h = horizon / samples;
  for (int k = 0; k < samples; ++k) {
    const double t = (k + 0.5) * h;
    total += h * (face_budget(grid, bdata.left.values(grid, t), 1.0) +
                  face_budget(grid, bdata.right.values(grid, t), -1.0));
  }
  if (!std::isfinite(total)) throw ConfigError("inflow entropy budget is not finite");
  return total;
}

}  // namespace boltzslab
