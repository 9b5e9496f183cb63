#pragma once

#include "boltzslab/collision.hpp"
#include "boltzslab/grid.hpp"
#include "boltzslab/transport.hpp"

#include <functional>
#include <string>
#include <vector>

namespace boltzslab {

enum class DtPolicy { Fixed, Auto };
std::string to_string(DtPolicy p);
DtPolicy dt_policy_from_string(const std::string& s);

/// Everything a run needs besides its own time-stepping controls.
struct Problem {
  VelocityGrid grid;
  SlabMesh mesh;
  CollisionConfig collision;
  BoundaryData boundary;
};

struct RunConfig {
  double horizon = 1.0;
  DtPolicy dt_policy = DtPolicy::Auto;
  double dt = 0.0;               ///< fixed policy only
  double stability = 0.5;        ///< collision bound dt ≤ stability / L_n
  int capture_stride = 1;        ///< steps between time-series rows (first and last always kept)
  std::vector<double> snapshot_times;  ///< steps are shortened to land on these
  int workers = 1;
  bool homogeneous = false;      ///< one cell, no transport, boundary ignored
  bool collisions = true;
  bool store_phases = false;     ///< keep the EvolutionLog phases (needed by verify)
  std::string dump_dir;          ///< where a NaN step dump goes; empty = no file

  void validate(const Problem& p) const;
};

/// One time-series row. Boundary quantities are cumulative since t = 0.
struct CaptureRow {
  double t = 0.0;
  int step = 0;
  double mass = 0.0;
  Vec3 momentum = Vec3::Zero();
  double energy = 0.0;
  double H_rel = 0.0;
  double D = 0.0;           ///< damped dissipation rate of the last step (0 at t = 0)
  double D_integral = 0.0;  ///< ∫ D dt
  double mass_in = 0.0, mass_out = 0.0;
  Vec3 momentum_in = Vec3::Zero(), momentum_out = Vec3::Zero();
  double energy_in = 0.0, energy_out = 0.0;
  double entropy_flux_in = 0.0, entropy_flux_out = 0.0;
  double clamp_mass = 0.0, clamp_energy = 0.0;  ///< cumulative magnitude removed by clamping
  double collision_entropy_error = 0.0;  ///< Σ_steps |ΔH_collision + dt·D|
};

/// Identity residuals of one capture row.
struct LedgerCheck {
  double mass = 0.0;         ///< |m + out - m0 - in| / m0
  Vec3 momentum = Vec3::Zero();  ///< per component, relative to max(m0, |p0|)
  double energy = 0.0;       ///< |E + out - E0 - in| / E0
  double entropy_excess = 0.0;  ///< H + h_out + ∫D - H0 - h_in (LHS - RHS)
};
LedgerCheck check_row(const CaptureRow& first, const CaptureRow& row);

struct RunSummary {
  int steps = 0;
  int halvings = 0;
  double dt_min = 0.0, dt_max = 0.0;
  double max_mass_residual = 0.0;
  Vec3 max_momentum_residual = Vec3::Zero();
  double max_energy_residual = 0.0;
  double clamp_energy_ratio = 0.0;   ///< total clamp energy / max energy over the run
  double max_entropy_excess = -std::numeric_limits<double>::infinity();
  double collision_entropy_error = 0.0;
  double max_local_mass_residual = 0.0;  ///< per-cell finite-volume balance, relative to cell scale
  double max_local_momentum_residual = 0.0;
  bool H_monotone = true;            ///< homogeneous runs: H nonincreasing within 1e-10 H0
  double max_H_increase = 0.0;
};

struct RunHistory {
  std::vector<CaptureRow> rows;
  FluxLedger ledger;
  EvolutionLog log;                        ///< phases only when store_phases
  std::vector<DistributionField> snapshots;  ///< at snapshot_times, plus initial and final
  DistributionField final_state;
  RunSummary summary;
};

/// f0 sampled at cell centres and nodes, cut at value n and outside B_{v_max},
/// smoothed by one pass of the tensor [1 2 1]/4 stencil in v (edge rows
/// renormalised) and lifted by (1/n) exp(-(x - L/2)²/2 - |v|²/2).
/// Throws ConfigError when ∫ f0 (1 + x² + |v|² + |log f0|) is not finite.
DistributionField mollify_initial(const DistributionField& f0, const VelocityGrid& grid, const SlabMesh& mesh, int n);

/// Strang splitting: half transport, explicit-midpoint collision, half
/// transport. Throws CflViolation for a fixed dt above dx/v_max and DataError
/// on a NaN (after writing the dump when dump_dir is set).
RunHistory run(const Problem& p, const RunConfig& cfg, const DistributionField& initial,
               const std::function<void(const CaptureRow&)>& on_capture = {});

struct SweepLevel {
  int n = 0;
  double angular_mass = 0.0;  ///< truncated_angular_mass(spec, n)
  double floor_mass = 0.0;
  RunSummary summary;
};

struct SweepReport {
  std::vector<SweepLevel> levels;
  std::vector<double> times;
  /// distances[k][t]: L¹(Ω × V) distance between levels k and k+1 at times[t].
  std::vector<std::vector<double>> distances;
};

/// Runs every level from f0 mollified at that level and compares successive
/// levels at the snapshot times of cfg (the horizon is always included).
SweepReport n_sweep(const Problem& p, const RunConfig& cfg, const DistributionField& f0, const std::vector<int>& levels);

/// Σ_c dx Σ_v |a - b| dv³.
double l1_distance(const VelocityGrid& grid, const SlabMesh& mesh, const DistributionField& a,
                   const DistributionField& b);

}  // namespace boltzslab
