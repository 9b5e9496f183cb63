#include "boltzslab/renorm.hpp"

#include <algorithm>
#include <cmath>

namespace boltzslab {

BetaFunction::BetaFunction(double d) : delta(d) {
  if (!(d > 0.0) || !std::isfinite(d)) throw ConfigError("beta: delta must be positive");
}

Renormalizer BetaFunction::renormalizer() const {
  const BetaFunction b = *this;
  return {[b](double f) { return b(f); }, [b](double f) { return b.prime(f); },
          "log(1+" + std::to_string(delta) + "f)/" + std::to_string(delta)};
}

SConvolution::SConvolution(const VelocityGrid& grid, const TruncatedKernel& kernel) : grid_(grid) {
  const int n = grid.n_per_axis();
  const int max_d2 = 3 * (n - 1) * (n - 1);
  table_.assign(max_d2 + 1, 0.0);
  for (int d2 = 1; d2 <= max_d2; ++d2) {
    const SValue s = s_of(kernel, std::sqrt(static_cast<double>(d2)) * grid.dv());
    if (s.divergent || !std::isfinite(s.value)) throw ConfigError("S kernel diverges: kernel is not admissible");
    table_[d2] = s.value;
  }
}

std::vector<double> SConvolution::apply(std::span<const double> f) const {
  const int n = grid_.n_per_axis(), N = grid_.size();
  std::vector<double> out(N, 0.0);
  for (int i0 = 0; i0 < n; ++i0)
    for (int i1 = 0; i1 < n; ++i1)
      for (int i2 = 0; i2 < n; ++i2) {
        double acc = 0.0;
        for (int j0 = 0; j0 < n; ++j0)
          for (int j1 = 0; j1 < n; ++j1) {
            const int a = i0 - j0, b = i1 - j1;
            const int base = a * a + b * b;
            const double* fj = f.data() + grid_.index(j0, j1, 0);
            for (int j2 = 0; j2 < n; ++j2) {
              const int c = i2 - j2;
              acc += fj[j2] * table_[base + c * c];
            }
          }
        out[grid_.index(i0, i1, i2)] = acc * grid_.weight();
      }
  return out;
}

std::vector<double> compute_R1(const CollisionOperator& op, const SConvolution& s, std::span<const double> f,
                               const BetaFunction& beta) {
  std::vector<double> conv = s.apply(f);
  const double damping = op.damping_for(f);
  for (std::size_t i = 0; i < conv.size(); ++i) conv[i] *= damping * (f[i] * beta.prime(f[i]) - beta(f[i]));
  return conv;
}

double compute_R2_weak(const CollisionOperator& op, std::span<const double> f, const BetaFunction& beta,
                       const TestFunction& phi, const TQuadrature& tq) {
  const VelocityGrid& g = op.grid();
  const TEvaluator T(op.config().kernel, tq);
  const int N = g.size();
  double total = 0.0;
  for (int i = 0; i < N; ++i) {
    const double bi = beta(f[i]);
    if (bi == 0.0) continue;
    double row = 0.0;
    for (int j = 0; j < N; ++j)
      if (j != i && f[j] != 0.0) row += f[j] * T(phi, g.node(i), g.node(j));
    total += bi * row;
  }
  return op.damping_for(f) * total * g.weight() * g.weight();
}

namespace {

RenormFields sweep(const CollisionOperator& op, std::span<const double> f, const BetaFunction& beta, bool want_r2) {
  const VelocityGrid& g = op.grid();
  const int N = g.size();
  const PaddedField pf(g, f);
  std::vector<double> bf(N), dbf(N);
  for (int i = 0; i < N; ++i) {
    bf[i] = beta(f[i]);
    dbf[i] = beta.prime(f[i]);
  }
  RenormFields out;
  out.r3.assign(N, 0.0);
  if (want_r2) out.r2.assign(N, 0.0);
  R3SignReport& sg = out.sign;
  auto inside = [](const int lo[3], const int hi[3], int i0, int i1, int i2) {
    return i0 >= lo[0] && i0 <= hi[0] && i1 >= lo[1] && i1 <= hi[1] && i2 >= lo[2] && i2 <= hi[2];
  };
  op.for_each_plan(true, [&](const PairPlan& p) {
    const bool nodal = p.t1[0] == 0.0 && p.t1[1] == 0.0 && p.t1[2] == 0.0;
    const int shift = g.index(p.d[0], p.d[1], p.d[2]) - g.index(0, 0, 0);
    for (int i0 = p.lo[0]; i0 <= p.hi[0]; ++i0)
      for (int i1 = p.lo[1]; i1 <= p.hi[1]; ++i1)
        for (int i2 = p.lo[2]; i2 <= p.hi[2]; ++i2) {
          const int i = g.index(i0, i1, i2);
          // f(v'), f(v_*'); zero off the lattice hull
          const double a = inside(p.in1_lo, p.in1_hi, i0, i1, i2) ? pf.interp(i0, i1, i2, p.o1, p.t1) : 0.0;
          const double b = inside(p.in2_lo, p.in2_hi, i0, i1, i2) ? pf.interp(i0, i1, i2, p.o2, p.t2) : 0.0;
          const double ba = beta(a);
          const double bracket = ba - bf[i] - dbf[i] * (a - f[i]);
          out.r3[i] += p.weight * b * bracket;
          if (want_r2) out.r2[i] += p.weight * (b * ba - f[i + shift] * bf[i]);
          // roundoff of the three-term difference scales with its largest part
          const double tol = 1e-13 * (std::abs(ba) + std::abs(bf[i]) + std::abs(dbf[i] * (a - f[i])));
          ++sg.terms;
          if (bracket > tol) ++sg.positive;
          if (nodal) {
            ++sg.nodal_terms;
            if (bracket > tol) ++sg.nodal_positive;
          }
          sg.max_bracket = std::max(sg.max_bracket, bracket);
        }
  }, false);
  const double s = op.damping_for(f) * g.weight();
  for (double& x : out.r3) x *= s;
  for (double& x : out.r2) x *= s;
  return out;
}

double pair(const VelocityGrid& g, const std::vector<double>& field, const TestFunction& phi) {
  double s = 0.0;
  for (int i = 0; i < g.size(); ++i) s += field[i] * phi.eval(g.node(i));
  return s * g.weight();
}

}  // namespace

RenormFields compute_R2_R3(const CollisionOperator& op, std::span<const double> f, const BetaFunction& beta) {
  return sweep(op, f, beta, true);
}

RenormFields compute_R3(const CollisionOperator& op, std::span<const double> f, const BetaFunction& beta) {
  return sweep(op, f, beta, false);
}

DecompositionReport decomposition_identity_check(const CollisionOperator& op, std::span<const double> f,
                                                 const BetaFunction& beta, const std::vector<TestFunction>& battery,
                                                 const TQuadrature& tq) {
  const VelocityGrid& g = op.grid();
  DecompositionReport rep;
  rep.tq = tq;
  const std::vector<double> q = op.collide_raw(f);
  std::vector<double> bq(q.size());
  for (std::size_t i = 0; i < q.size(); ++i) bq[i] = beta.prime(f[i]) * q[i];
  const SConvolution S(g, op.config().kernel);
  const std::vector<double> r1 = compute_R1(op, S, f, beta);
  const RenormFields rf = compute_R2_R3(op, f, beta);
  rep.sign = rf.sign;
  for (const auto& phi : battery) {
    DecompositionRow row;
    row.label = phi.label;
    row.lhs = pair(g, bq, phi);
    row.r1 = pair(g, r1, phi);
    row.r2_weak = compute_R2_weak(op, f, beta, phi, tq);
    row.r2_direct = pair(g, rf.r2, phi);
    row.r3 = pair(g, rf.r3, phi);
    row.residual = row.lhs - (row.r1 + row.r2_weak - row.r3);
    row.scale = std::abs(row.lhs) + std::abs(row.r1) + std::abs(row.r2_weak) + std::abs(row.r3);
    rep.max_residual = std::max(rep.max_residual, std::abs(row.residual));
    rep.rows.push_back(row);
  }
  return rep;
}

std::vector<SlabTestFunction> renorm_psi_battery(const SlabMesh& mesh, const VelocityGrid& grid) {
  const double L = mesh.length;
  std::vector<SlabTestFunction> out;
  for (double R : {2.0, 4.0, grid.v_max()}) {
    const double R2 = R * R;
    auto vb = [R2](const Vec3& v) {
      const double u = 1.0 - v.squaredNorm() / R2;
      return u > 0.0 ? u * u * u : 0.0;
    };
    out.push_back({[L, vb](double x, const Vec3& v) { return 4.0 * x * (L - x) / (L * L) * vb(v); },
                   [L, vb](double x, const Vec3& v) { return 4.0 * (L - 2.0 * x) / (L * L) * vb(v); },
                   "xbump*vbump(R=" + std::to_string(R).substr(0, 4) + ")"});
  }
  return out;
}

std::vector<RenormResidualRow> renormalized_residual(const VelocityGrid& grid, const SlabMesh& mesh,
                                                     const EvolutionLog& log, const BetaFunction& beta,
                                                     const std::vector<SlabTestFunction>& battery) {
  const std::size_t size = static_cast<std::size_t>(mesh.n_cells) * grid.size();
  if (log.initial.values.size() != size || log.final_state.values.size() != size ||
      (log.phases.empty() && log.initial.values != log.final_state.values))
    throw DataError("renormalized_residual: incomplete history (no stored phases for a run that moved)");
  const Renormalizer r = beta.renormalizer();
  std::vector<RenormResidualRow> rows;
  for (const auto& psi : battery) {
    const WeakFormTerms t = weak_form_terms(grid, mesh, log, r, psi, WeakPairing::Discrete);
    double jensen = 0.0;
    for (const PhaseRecord& p : log.phases) {
      if (p.kind != PhaseRecord::Kind::Collision) continue;
      for (int c = 0; c < mesh.n_cells; ++c) {
        const double x = mesh.center(c);
        for (int i = 0; i < grid.size(); ++i) {
          const std::size_t k = static_cast<std::size_t>(c) * grid.size() + i;
          const double f = p.before.values[k], d = p.increment[k];
          jensen += (beta(f + d) - beta(f) - beta.prime(f) * d) * psi.psi(x, grid.node(i));
        }
      }
    }
    rows.push_back({psi.label, t.residual(), t.scale(), jensen * mesh.dx() * grid.weight()});
  }
  return rows;
}

TestFunction ball_cutoff(double R) {
  if (!(R > 0.0)) throw ConfigError("ball_cutoff: radius must be positive");
  // 1 - (6u⁵ - 15u⁴ + 10u³), u = |v|/R - 1: sup|S'| = 15/8, sup|S''| = 10/√3
  const double norm = std::max({1.0, 1.875 / R, (10.0 / std::sqrt(3.0) + 1.875) / (R * R)});
  return {[R](const Vec3& v) {
            const double u = v.norm() / R - 1.0;
            if (u <= 0.0) return 1.0;
            if (u >= 1.0) return 0.0;
            return 1.0 - u * u * u * (10.0 + u * (-15.0 + 6.0 * u));
          },
          norm, "cutoff(R=" + std::to_string(R).substr(0, 4) + ")"};
}

NormReport lemma_norm_report(const CollisionOperator& op, const SConvolution& s, const SlabMesh& mesh,
                             const std::vector<DistributionField>& snapshots, const FluxLedger& ledger,
                             const BetaFunction& beta) {
  if (snapshots.empty()) throw DataError("lemma_norm_report: no snapshots");
  const VelocityGrid& g = op.grid();
  NormReport rep;
  rep.radii = {2.0, 4.0, g.v_max()};
  const std::size_t nr = rep.radii.size(), ns = snapshots.size();
  std::vector<TestFunction> cut;
  for (double R : rep.radii) cut.push_back(ball_cutoff(R));
  rep.r1_sup.assign(nr, 0.0);
  rep.r2_sup.assign(nr, 0.0);
  rep.r3_integral.assign(nr, 0.0);
  rep.r3_bound.assign(nr, 0.0);
  // per snapshot and radius: ∫∫|R3|φ, ∫∫R1 φ, ∫∫R2 φ
  std::vector<std::vector<double>> r3s(ns, std::vector<double>(nr)), r1s = r3s, r2s = r3s;
  const double dx = mesh.dx();
  for (std::size_t k = 0; k < ns; ++k) {
    const DistributionField& F = snapshots[k];
    rep.times.push_back(F.time);
    std::vector<double> r1_norm(nr, 0.0);
    for (int c = 0; c < F.n_cells; ++c) {
      const auto f = F.cell(c);
      const std::vector<double> r1 = compute_R1(op, s, f, beta);
      const RenormFields rf = compute_R2_R3(op, f, beta);
      for (std::size_t a = 0; a < nr; ++a) {
        const double R2 = rep.radii[a] * rep.radii[a];
        for (int i = 0; i < g.size(); ++i) {
          const double phi = cut[a].eval(g.node(i));
          if (g.speed2(i) <= R2) r1_norm[a] += std::abs(r1[i]) * g.weight() * dx;
          r1s[k][a] += r1[i] * phi * g.weight() * dx;
          r2s[k][a] += rf.r2[i] * phi * g.weight() * dx;
          r3s[k][a] += std::abs(rf.r3[i]) * phi * g.weight() * dx;
        }
      }
    }
    for (std::size_t a = 0; a < nr; ++a) {
      rep.r1_sup[a] = std::max(rep.r1_sup[a], r1_norm[a]);
      rep.r2_sup[a] = std::max(rep.r2_sup[a], std::abs(r2s[k][a]) / cut[a].w2inf_norm);
    }
  }
  auto beta_mass = [&](const DistributionField& F, const TestFunction& phi) {
    double m = 0.0;
    for (int c = 0; c < F.n_cells; ++c)
      for (int i = 0; i < g.size(); ++i) m += beta(F.at(c, i)) * phi.eval(g.node(i));
    return m * g.weight() * dx;
  };
  const FaceFlux tot = ledger.total();
  for (std::size_t a = 0; a < nr; ++a) {
    double i3 = 0.0, a1 = 0.0, a2 = 0.0;
    for (std::size_t k = 1; k < ns; ++k) {
      const double h = 0.5 * (rep.times[k] - rep.times[k - 1]);
      i3 += h * (r3s[k][a] + r3s[k - 1][a]);
      a1 += h * (r1s[k][a] + r1s[k - 1][a]);
      a2 += h * (r2s[k][a] + r2s[k - 1][a]);
    }
    rep.r3_integral[a] = i3;
    rep.r3_bound[a] = std::abs(a1) + std::abs(a2) + beta_mass(snapshots.back(), cut[a]) +
                      beta_mass(snapshots.front(), cut[a]) + tot.mass_in + tot.mass_out;
  }
  return rep;
}

}  // namespace boltzslab
