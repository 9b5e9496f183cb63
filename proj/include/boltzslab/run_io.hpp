#pragma once

#include "boltzslab/cancellation.hpp"
#include "boltzslab/config.hpp"
#include "boltzslab/kernel.hpp"
#include "boltzslab/renorm.hpp"
#include "boltzslab/solver.hpp"

#include "json.hpp"

#include <string>
#include <vector>

namespace boltzslab {

// Insertion-ordered so a document always serialises to the same bytes.
using Json = nlohmann::ordered_json;

/// A report plus its verdict. `failure` names the first failing entry.
struct Certificate {
  Json doc;
  bool pass = true;
  std::string failure;

  /// Appends {name, value, relation, tolerance, pass, discretization} to doc["checks"].
  void check(const std::string& name, double value, const std::string& relation, double tolerance,
             const Json& disc);
  /// Informational number: tolerance null, no verdict.
  void info(const std::string& name, double value, const Json& disc);
};

/// Grid, mesh, sphere rule, truncation level, kernel and time-stepping
/// parameters of a configuration.
Json discretization_json(const SimConfig& cfg);

std::string read_text(const std::string& path);
/// Pretty-printed with a trailing newline; creates parent directories.
void write_json(const std::string& path, const Json& doc);

/// Columns t, mass, px, py, pz, energy, H_rel, D, mass_in, mass_out,
/// energy_in, energy_out, entropy_flux_in, entropy_flux_out, clamp_mass,
/// then step, D_integral, clamp_energy, collision_entropy_error.
void write_timeseries_csv(const std::string& path, const std::vector<CaptureRow>& rows);
/// Rows (t, face, v1, v2, v3, gamma_f) for every stored transport phase:
/// outgoing traces and the prescribed inflow, nonzero entries only.
void write_traces_csv(const std::string& path, const VelocityGrid& grid, const EvolutionLog& log);

Certificate kernel_certificate(const SimConfig& cfg, const AssumptionReport& rep);

/// Radii used by the cancellation subcommand.
std::vector<double> cancellation_radii();
/// Columns z, S, S_over_z2.
void write_s_profile_csv(const std::string& path, const SProfile& prof);
/// Growth ratios strictly decreasing over z ∈ {10, 30, 100}, zero 𝒯 violations
/// at both quadratures and the fitted constant stable within 20% under θ doubling.
Certificate cancellation_certificate(const SimConfig& cfg, const SProfile& prof, const TBoundReport& coarse,
                                     const TBoundReport& fine);

/// Ledger identities, clamp ratio, local balances, entropy inequality and (homogeneous) monotone H.
Certificate simulate_certificate(const SimConfig& cfg, const RunHistory& hist);

struct StoredRun {
  std::string config_ini;
  std::string base_dir;  ///< where relative table paths resolve
  RunHistory history;
};

/// CBOR file with the resolved config, time series, ledger, phase log and snapshots.
void save_run(const std::string& path, const SimConfig& cfg, const std::string& base_dir, const RunHistory& hist);
StoredRun load_run(const std::string& path);

/// Weak-form checks on a stored run: β = id identity (discrete pairing), the
/// renormalized residual per ψ against its collision Jensen term, ledger
/// reproducibility from traces, the R1/R2/R3 norm report over the snapshots,
/// R3 sign on the final state and the δ family on its middle cell.
Certificate verify_certificate(const SimConfig& cfg, const StoredRun& run);

/// Per-level ledger checks; distances and masses reported.
Certificate sweep_certificate(const SimConfig& cfg, const SweepReport& rep);
/// Columns t, n_lo, n_hi, distance.
void write_sweep_csv(const std::string& path, const SweepReport& rep);

}  // namespace boltzslab
