#pragma once

#include "boltzslab/common.hpp"

#include <Eigen/Dense>

#include <span>
#include <vector>

namespace boltzslab {

/// Cell-centred cubic velocity lattice on [-v_max, v_max]^3.
class VelocityGrid {
 public:
  VelocityGrid(int n_per_axis = 12, double v_max = 6.0);

  int n_per_axis() const { return n_; }
  double v_max() const { return v_max_; }
  double dv() const { return dv_; }
  double weight() const { return dv_ * dv_ * dv_; }
  int size() const { return n_ * n_ * n_; }

  double coord(int i) const { return -v_max_ + (i + 0.5) * dv_; }
  int index(int i, int j, int k) const { return (i * n_ + j) * n_ + k; }
  const Vec3& node(int idx) const { return nodes_[idx]; }
  const std::vector<Vec3>& nodes() const { return nodes_; }
  double speed2(int idx) const { return nodes_[idx].squaredNorm(); }
  /// Index of the node at -v.
  int mirror(int idx) const { return size() - 1 - idx; }
  /// Largest |v_1| on the lattice (sets the transport CFL limit).
  double max_abs_v1() const { return coord(n_ - 1); }

 private:
  int n_;
  double v_max_;
  double dv_;
  std::vector<Vec3> nodes_;
};

/// Uniform 1-D mesh of the slab [0, L]; the outward normal is -e1 at x = 0 and
/// +e1 at x = L. Tangential directions are homogeneous with unit face area.
struct SlabMesh {
  double length = 2.0;
  int n_cells = 16;

  SlabMesh() = default;
  SlabMesh(double L, int cells);
  double dx() const { return length / n_cells; }
  double center(int c) const { return (c + 0.5) * dx(); }
};

/// Graded Gauss-Legendre nodes in θ on [θ_min, θ_support] times a uniform
/// azimuth rule on [0, 2π).
struct SphereQuadrature {
  std::vector<double> theta, theta_w;
  std::vector<double> azimuth, azimuth_w;

  /// n_theta nodes as panels of 4 (or a single panel when n_theta is not a
  /// multiple of 4), geometrically graded toward theta_min.
  static SphereQuadrature graded(double theta_min, double theta_support, int n_theta, int n_azimuth);
  int n_theta() const { return static_cast<int>(theta.size()); }
  int n_azimuth() const { return static_cast<int>(azimuth.size()); }
};

/// Nonnegative density on (slab cell) x (velocity node), cell-major.
struct DistributionField {
  int n_cells = 0;
  int n_vel = 0;
  double time = 0.0;
  std::vector<double> values;

  DistributionField() = default;
  DistributionField(int cells, int vel, double fill = 0.0)
      : n_cells(cells), n_vel(vel), values(static_cast<std::size_t>(cells) * vel, fill) {}

  std::span<double> cell(int c) { return {values.data() + static_cast<std::size_t>(c) * n_vel, static_cast<std::size_t>(n_vel)}; }
  std::span<const double> cell(int c) const {
    return {values.data() + static_cast<std::size_t>(c) * n_vel, static_cast<std::size_t>(n_vel)};
  }
  double& at(int c, int v) { return values[static_cast<std::size_t>(c) * n_vel + v]; }
  double at(int c, int v) const { return values[static_cast<std::size_t>(c) * n_vel + v]; }
};

/// Trilinear interpolation of a nodal field, clamped at 0; 0 outside the hull
/// of the lattice nodes.
double interpolate(const VelocityGrid& grid, std::span<const double> f_cell, const Vec3& v);

/// Mass, momentum, energy ∫|v|² f and entropy ∫ f log f of one cell (weight dv^3).
struct Moments {
  double mass = 0.0;
  Vec3 momentum = Vec3::Zero();
  double energy = 0.0;
  double entropy = 0.0;

  Moments& operator+=(const Moments& o) {
    mass += o.mass;
    momentum += o.momentum;
    energy += o.energy;
    entropy += o.entropy;
    return *this;
  }
  Moments scaled(double s) const { return {mass * s, momentum * s, energy * s, entropy * s}; }
};

Moments moments(const VelocityGrid& grid, std::span<const double> f_cell);
/// Sum over cells, weighted by dx.
Moments moments(const VelocityGrid& grid, const SlabMesh& mesh, const DistributionField& f);

/// The five collision-invariant moments Σ φ_a q (1, v1, v2, v3, |v|²), without dv^3.
Eigen::Matrix<double, 5, 1> invariant_sums(const VelocityGrid& grid, std::span<const double> q);

/// Subtracts the discrete L² projection onto span{1, v, |v|²}.
void project_conservative(const VelocityGrid& grid, std::span<double> q);

/// Subtracts w·p with p ∈ span{1, v, |v|²} chosen so q has zero invariant
/// moments. Falls back to the L² projection when the w-weighted Gram matrix is
/// numerically singular; returns false in that case.
bool project_conservative_weighted(const VelocityGrid& grid, std::span<double> q, std::span<const double> w);

/// ρ (2πT)^{-3/2} exp(-|v-u|²/(2T)) at the nodes.
std::vector<double> maxwellian(double rho, const Vec3& u, double T, const VelocityGrid& grid);
/// Unit-mass, zero-drift, unit-temperature reference Maxwellian used in H(f|M).
std::vector<double> reference_maxwellian(const VelocityGrid& grid);

/// Σ h(f/M) M dv^3 for one cell.
double relative_entropy(const VelocityGrid& grid, std::span<const double> f_cell, std::span<const double> M);
double relative_entropy(const VelocityGrid& grid, const SlabMesh& mesh, const DistributionField& f,
                        std::span<const double> M);

/// Maxwellian with the same mass, momentum and energy as f (continuum formulas).
std::vector<double> moment_matched_maxwellian(const VelocityGrid& grid, std::span<const double> f_cell);

/// Σ |a - b| dv^3.
double l1_distance(const VelocityGrid& grid, std::span<const double> a, std::span<const double> b);

}  // namespace boltzslab
