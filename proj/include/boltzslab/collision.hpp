#pragma once

#include "boltzslab/common.hpp"
#include "boltzslab/grid.hpp"
#include "boltzslab/kernel.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace boltzslab {

enum class CollisionMode { ExactSum, Subsampled };
/// How the post-summation conservation correction is distributed:
/// Weighted subtracts f·p (p a collision invariant), L2 subtracts p itself.
enum class ProjectionKind { Weighted, L2 };

std::string to_string(CollisionMode m);
CollisionMode collision_mode_from_string(const std::string& s);
std::string to_string(ProjectionKind p);
ProjectionKind projection_kind_from_string(const std::string& s);

struct CollisionConfig {
  TruncatedKernel kernel;
  SphereQuadrature quad;
  CollisionMode mode = CollisionMode::ExactSum;
  int subsample_pairs = 4096;  ///< samples of (v_*, ω) per output node in subsampled mode
  std::optional<std::uint64_t> seed;
  ProjectionKind projection = ProjectionKind::Weighted;

  /// θ nodes graded on [1/n, theta_support], uniform azimuth.
  static CollisionConfig make(const TruncatedKernel& kernel, int n_theta = 16, int n_azimuth = 8);
};

/// Nodal field stored with one layer of zero padding so that interpolation
/// stencils touching the upper lattice face stay in bounds.
class PaddedField {
 public:
  PaddedField(const VelocityGrid& grid, std::span<const double> f);
  int stride1() const { return s_; }
  int stride0() const { return s_ * s_; }
  /// Pointer to lattice point (i0, i1, i2); indices may range over [-1, n].
  const double* at(int i0, int i1, int i2) const { return data_.data() + ((i0 + 1) * s_ + (i1 + 1)) * s_ + (i2 + 1); }
  /// Trilinear value at lattice position i + o + t (no clamping).
  double interp(int i0, int i1, int i2, const int o[3], const double t[3]) const;

 private:
  int s_;
  std::vector<double> data_;
};

/// One (displacement d, θ node, azimuth node) term of the collision sum. For
/// every lattice node i in [lo, hi] the partner is j = i + d, the post-collision
/// velocity v' sits at lattice position i + o1 + t1 and v_*' at i + o2 + t2.
struct PairPlan {
  int d[3];
  double weight;  ///< w_θ sin θ b(θ) w_φ |z|^γ (no dv^3 factor)
  int lo[3], hi[3];   ///< nodes v with v and v_* on the lattice (and v', v_*' in its hull when clipped)
  int in1_lo[3], in1_hi[3];  ///< nodes whose v' lies in the lattice hull
  int in2_lo[3], in2_hi[3];  ///< same for v_*'
  int o1[3];
  double t1[3];
  int o2[3];
  double t2[3];
};

/// Per-cell collision output.
struct CollisionResult {
  std::vector<double> q;
  Eigen::Matrix<double, 5, 1> defect_before = Eigen::Matrix<double, 5, 1>::Zero();  ///< dv^3-weighted invariant moments of the raw Q
  bool weighted_projection = false;
  double density = 0.0;
  double damping = 1.0;
  double dissipation = 0.0;  ///< D_{B_n}(f) without damping; only set when requested
  double loss_frequency_max = 0.0;
};

/// Discrete truncated collision operator on one velocity lattice.
class CollisionOperator {
 public:
  CollisionOperator(const VelocityGrid& grid, CollisionConfig cfg);

  const VelocityGrid& grid() const { return grid_; }
  const CollisionConfig& config() const { return cfg_; }
  /// 2π Σ_k w_k sin θ_k b(θ_k): discrete angular mass of the θ rule.
  double angular_mass() const { return angular_mass_; }

  /// damping(ρ) Σ_{v_*, ω} w B_n (f'f_*' - f f_*) dv^3, before projection.
  std::vector<double> collide_raw(std::span<const double> f) const;
  /// Raw operator followed by the conservative projection.
  CollisionResult collide(std::span<const double> f, bool with_dissipation = false) const;
  /// Q(f, g)_i = damping Σ w B_n (f(v') g(v_*') - f_i g_j) dv^3.
  std::vector<double> bilinear_raw(std::span<const double> f, std::span<const double> g, double damping = 1.0) const;
  /// (1/4) Σ w B_n (f'f_*' - f f_*) log(f'f_*'/(f f_*)) dv^6.
  double dissipation(std::span<const double> f) const;
  /// sup_v damping Σ_{v_*} |z|^γ (angular mass) f_* dv^3.
  double loss_frequency_max(std::span<const double> f) const;
  double damping_for(std::span<const double> f) const;
  /// Σ_j |z_ij|^γ·window·f_j times the discrete angular mass (no damping, no dv³).
  std::vector<double> loss_rate(std::span<const double> f) const;

  /// Visits every exact-sum term group. With ordered = false only one of d, -d
  /// is visited (the gain of an unordered pair is shared by both nodes).
  /// clip = false keeps nodes whose post-collision points leave the hull
  /// (f is zero there); the gain never needs them.
  void for_each_plan(bool ordered, const std::function<void(const PairPlan&)>& fn, bool clip = true) const;

 private:
  struct Direction {
    double ct, st, cphi, sphi, weight;
  };
  void exact_gain(const PaddedField& pf, const PaddedField* pg, std::span<const double> f, std::span<double> g_out,
                  std::span<double> g_out_swapped, double* dissipation) const;
  void subsampled_gain(std::span<const double> f, std::span<const double> g, std::span<double> gain,
                       double* dissipation) const;
  bool make_plan(const int d[3], double speed, const Vec3& kappa, const Vec3& e1, const Vec3& e2, const Direction& dir,
                 bool clip, PairPlan& plan) const;

  VelocityGrid grid_;
  CollisionConfig cfg_;
  double angular_mass_ = 0.0;
  std::vector<Direction> dirs_;
  std::vector<double> speed_by_d2_;  ///< |z|^γ·window, indexed by |d|² (lattice units)
};

std::vector<double> collide_cell(const VelocityGrid& grid, std::span<const double> f, const CollisionConfig& cfg);
double dissipation_cell(const VelocityGrid& grid, std::span<const double> f, const CollisionConfig& cfg);

/// Applies the projected operator cell-wise; `workers` threads share the cells.
/// Results do not depend on the worker count.
std::vector<CollisionResult> collide_field(const CollisionOperator& op, const DistributionField& f, int workers = 1,
                                           bool with_dissipation = false);

/// Orthonormal frame (κ, e1, e2) for the deviation-angle parametrisation: e1 is
/// κ × a normalised, with a the coordinate axis least aligned with κ.
void collision_frame(const Vec3& kappa, Vec3& e1, Vec3& e2);

/// splitmix64-based counter hash used by the subsampled mode.
std::uint64_t counter_hash(std::uint64_t seed, std::uint64_t a, std::uint64_t b);

}  // namespace boltzslab
