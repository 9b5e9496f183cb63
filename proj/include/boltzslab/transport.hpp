#pragma once

#include "boltzslab/common.hpp"
#include "boltzslab/grid.hpp"

#include <array>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace boltzslab {

struct MaxwellianWall {
  double rho = 1.0;
  Vec3 u = Vec3::Zero();
  double T = 1.0;
};

/// Inflow samples g(t, v) read from CSV rows (t, v1, v2, v3, g). Velocities
/// must sit on lattice nodes; nodes absent from a time slice get g = 0.
/// Between tabulated times g is linear in t, constant outside the range.
class InflowTable {
 public:
  static InflowTable from_csv(const std::string& path, const VelocityGrid& grid);
  static InflowTable from_rows(const std::vector<std::array<double, 5>>& rows, const VelocityGrid& grid);

  std::vector<double> at(double t) const;
  const std::vector<double>& times() const { return times_; }

 private:
  std::vector<double> times_;
  std::vector<std::vector<double>> slices_;
};

struct FaceInflow {
  enum class Mode { Maxwellian, Tabulated };
  Mode mode = Mode::Maxwellian;
  MaxwellianWall wall{0.0, Vec3::Zero(), 1.0};
  std::shared_ptr<const InflowTable> table;

  static FaceInflow maxwellian(const MaxwellianWall& w);
  static FaceInflow vacuum() { return maxwellian({0.0, Vec3::Zero(), 1.0}); }
  static FaceInflow tabulated(std::shared_ptr<const InflowTable> t);
  /// g(t, ·) at every lattice node; callers use only the incoming half.
  std::vector<double> values(const VelocityGrid& grid, double t) const;
};

struct BoundaryData {
  FaceInflow left = FaceInflow::vacuum();   // face x = 0, incoming v1 > 0
  FaceInflow right = FaceInflow::vacuum();  // face x = L, incoming v1 < 0
  bool check_entropy_bound = true;

  /// Rejects negative or nonfinite g and, when check_entropy_bound is set, a
  /// nonfinite ∫ g(1 + |v|² + |log g|)|v1| at t = 0.
  void validate(const VelocityGrid& grid) const;
};

/// Time-integrated fluxes through one face, each weighted by |v1| dv³ dt.
/// "in" collects incoming nodes (values g), "out" outgoing nodes (values γ₊f).
struct FaceFlux {
  double mass_in = 0.0, mass_out = 0.0;
  Vec3 momentum_in = Vec3::Zero(), momentum_out = Vec3::Zero();
  double energy_in = 0.0, energy_out = 0.0;
  double entropy_in = 0.0, entropy_out = 0.0;    ///< h(f/M) M with M the reference Maxwellian
  double flogf_in = 0.0, flogf_out = 0.0;        ///< f log f
  double abslog_in = 0.0, abslog_out = 0.0;      ///< f |log f|
  double weighted_in = 0.0, weighted_out = 0.0;  ///< (1 + |v|²) f

  FaceFlux& operator+=(const FaceFlux& o);
};

struct FluxLedger {
  FaceFlux left, right;
  int phases = 0;  ///< transport phases accumulated

  FaceFlux total() const;
  FluxLedger& operator+=(const FluxLedger& o);
};

/// Boundary values seen by one transport phase: γ₊f on the outgoing half
/// lattice of each face and the prescribed inflow on the incoming half
/// (other entries are 0).
struct TraceRecord {
  double time = 0.0, dt = 0.0;
  std::vector<double> left_out, right_out;
  std::vector<double> left_in, right_in;
};

struct TransportResult {
  FluxLedger flux;
  TraceRecord trace;
};

/// dx / v_max.
double cfl_limit(const VelocityGrid& grid, const SlabMesh& mesh);

/// First-order upwind update of f over [f.time, f.time + dt]; inflow is
/// evaluated at the phase midpoint. Throws CflViolation when dt > dx / v_max.
TransportResult transport_step(DistributionField& f, const VelocityGrid& grid, const SlabMesh& mesh,
                               const BoundaryData& bdata, double dt);

/// One splitting phase of a run, enough to rebuild every weak-form term.
struct PhaseRecord {
  enum class Kind { Transport, Collision };
  Kind kind = Kind::Transport;
  double time = 0.0, dt = 0.0;
  DistributionField before;
  TraceRecord trace;                 // transport only
  std::vector<double> increment;     // collision only: after - before, cell-major
};

struct EvolutionLog {
  DistributionField initial;
  DistributionField final_state;
  std::vector<PhaseRecord> phases;

  int transport_phases() const;
};

/// ψ(x, v) with its x-derivative; time-independent.
struct SlabTestFunction {
  std::function<double(double, const Vec3&)> psi;
  std::function<double(double, const Vec3&)> dpsi_dx;
  std::string label;
};

struct Renormalizer {
  std::function<double(double)> beta;
  std::function<double(double)> dbeta;
  std::string label;
};
Renormalizer identity_renormalizer();

struct WeakFormTerms {
  double end_minus_start = 0.0;  ///< [∫β(f)ψ]_0^T
  double transport = 0.0;        ///< ∫∫ β(f) v1 ∂xψ
  double source = 0.0;           ///< ∫∫ β'(f) Q ψ
  double outflow = 0.0;          ///< ∫ β(γ₊f) ψ |v1| over Σ₊
  double inflow = 0.0;           ///< ∫ β(g) ψ |v1| over Σ₋
  /// end_minus_start + outflow - inflow - transport - source (≥ 0 for concave β up to discretisation).
  double residual() const { return end_minus_start + outflow - inflow - transport - source; }
  /// Σ |terms|, the natural size of the residual.
  double scale() const;
};

/// Continuum: ψ(0, v), ψ(L, v) on the faces and ∂xψ at cell centres, so the
/// pairing carries an O(dx) consistency error. Discrete: the summation-by-parts
/// form of the upwind scheme (ψ at cell centres, face differences ψ_{c+1} - ψ_c
/// against the upwind value, boundary terms weighted by the adjacent cell's ψ),
/// for which β = id gives an exact identity.
enum class WeakPairing { Continuum, Discrete };

WeakFormTerms weak_form_terms(const VelocityGrid& grid, const SlabMesh& mesh, const EvolutionLog& log,
                              const Renormalizer& beta, const SlabTestFunction& psi,
                              WeakPairing pairing = WeakPairing::Continuum);

struct GreenReport {
  std::vector<std::string> labels;
  std::vector<double> residuals;  ///< signed residual per ψ
  std::vector<double> scales;
  double max_abs_residual = 0.0;
  double ledger_mismatch = 0.0;   ///< |log mass flux - ledger mass flux| (both faces)
};

/// Weak-form Green identity for each ψ with the given β. The ledger must
/// cover the same transport phases as the log.
GreenReport green_identity_check(const VelocityGrid& grid, const SlabMesh& mesh, const EvolutionLog& log,
                                 const FluxLedger& ledger, const Renormalizer& beta,
                                 const std::vector<SlabTestFunction>& battery);

/// ψ = 1 and ψ = x(L - x) (scaled to peak 1).
std::vector<SlabTestFunction> default_green_battery(const SlabMesh& mesh);

/// ∫_0^T ∫_{Σ₋} g(1 + |v|² + |log g|)|v1| dv dt summed over both faces.
/// Throws ConfigError when the budget is not finite.
double inflow_entropy_budget(const BoundaryData& bdata, const VelocityGrid& grid, double horizon);

}  // namespace boltzslab
