#pragma once

#include "boltzslab/solver.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace boltzslab {

struct InitialSpec {
  enum class Kind { Maxwellian, Bimodal, Random };
  Kind kind = Kind::Maxwellian;
  double rho = 1.0;
  double T = 1.0;
  Vec3 u = Vec3::Zero();
  double separation = 1.5;  ///< bimodal/random: the two beams sit at ±separation along v1
  bool mollify = true;
};

/// A fully resolved, validated configuration. `ini` holds every key with its
/// effective value, in a fixed order, so it can be stored and re-read.
struct SimConfig {
  CrossSectionSpec kernel;
  int n = 8;
  bool damping = true;
  int n_theta = 16, n_azimuth = 8;
  CollisionMode mode = CollisionMode::ExactSum;
  int samples = 4096;
  std::optional<std::uint64_t> seed;
  ProjectionKind projection = ProjectionKind::Weighted;
  int n_per_axis = 12;
  double v_max = 6.0;
  double length = 2.0;
  int n_cells = 16;
  BoundaryData boundary;
  InitialSpec initial;
  RunConfig run;
  double beta_delta = 1.0;
  std::vector<int> sweep_levels = {4, 8, 16};
  std::string ini;

  Problem problem() const;
  /// Initial field (before mollification); Random draws use seed (default 1).
  DistributionField initial_field() const;
  /// initial_field(), mollified at level n unless initial.mollify is off.
  DistributionField prepared_initial() const;
};

std::vector<std::string> preset_names();
/// INI text of a shipped preset; ConfigError for an unknown name.
std::string preset_text(const std::string& name);

/// Parses INI text, applies "section.key=value" overrides and validates.
/// Unknown sections or keys are rejected. base_dir resolves relative table paths.
SimConfig parse_config(const std::string& ini_text, const std::vector<std::string>& overrides = {},
                       const std::string& base_dir = ".");
/// `source` is a file path or a preset name.
SimConfig load_config(const std::string& source, const std::vector<std::string>& overrides = {});

}  // namespace boltzslab
