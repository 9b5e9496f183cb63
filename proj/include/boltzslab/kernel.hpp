#pragma once

#include "boltzslab/common.hpp"
#include "boltzslab/quadrature.hpp"

#include <map>
#include <string>
#include <vector>

namespace boltzslab {

enum class KernelKind { InversePower, HardSphere, Tabulated };

std::string to_string(KernelKind kind);
KernelKind kernel_kind_from_string(const std::string& name);

/// Separable cross-section B(z, cos θ) = |z|^γ b(cos θ), with b supported on
/// (0, theta_support].
///
/// Inverse-power potentials use the closed form b(cos θ) = K θ^{-1-s'} / sin θ,
/// γ = (s-5)/(s-1), s' = 2/(s-1). Hard spheres use b = 1/(4π), γ = 1.
/// Tabulated kernels interpolate log b linearly in log θ and extrapolate the
/// leading power law below the first sample.
struct CrossSectionSpec {
  KernelKind kind = KernelKind::InversePower;
  double s = 5.0;
  double K = 1.0;
  double gamma = 0.0;
  double sprime = 0.5;
  double theta_support = pi / 2;
  std::vector<double> table_theta;  ///< tabulated only, increasing
  std::vector<double> table_b;

  static CrossSectionSpec inverse_power(double s, double K, double theta_support = pi / 2);
  static CrossSectionSpec hard_sphere(double theta_support = pi / 2);
  static CrossSectionSpec tabulated(std::vector<double> theta, std::vector<double> b, double gamma,
                                    double theta_support = pi / 2);

  /// γ ≥ -3, 0 ≤ s' < 2, s' + γ < 2.
  bool admissible() const;

  /// b as a function of the deviation angle; 0 outside (0, theta_support].
  double angular(double theta) const;
  /// |z|^γ, with +inf at z = 0 when γ < 0.
  double speed_factor(double z) const;
};

/// B(z, cos θ); +inf sentinels at θ = 0 (inverse power) and at z = 0 with γ < 0.
double eval_kernel(const CrossSectionSpec& spec, double z, double cos_theta);
double eval_kernel_theta(const CrossSectionSpec& spec, double z, double theta);

/// Level-n truncation: B_n = B · 1[1/n ≤ θ] · 1[1/n ≤ |z| ≤ n²].
struct TruncatedKernel {
  CrossSectionSpec base;
  int n = 8;
  bool damping = true;

  TruncatedKernel() = default;
  TruncatedKernel(CrossSectionSpec spec, int level, bool damp = true);

  double theta_min() const { return 1.0 / n; }
  double z_min() const { return 1.0 / n; }
  double z_max() const { return static_cast<double>(n) * n; }
  bool in_speed_window(double z) const { return z >= z_min() && z <= z_max(); }
  /// Masked speed factor |z|^γ 1[z window].
  double speed_factor(double z) const { return in_speed_window(z) ? base.speed_factor(z) : 0.0; }
  /// Masked angular factor b(θ) 1[θ ≥ 1/n].
  double angular(double theta) const { return theta >= theta_min() ? base.angular(theta) : 0.0; }
  /// 1 / (1 + ρ/n) when damping is enabled.
  double damping_factor(double density) const { return damping ? 1.0 / (1.0 + density / n) : 1.0; }
};

double eval_truncated(const TruncatedKernel& k, double z, double cos_theta);
double eval_truncated_theta(const TruncatedKernel& k, double z, double theta);

/// Result of a sphere integral that may diverge; carries its quadrature metadata.
struct MomentResult {
  double value = 0.0;
  bool divergent = false;
  bool converged = true;
  int nodes = 0;
  double refinement_delta = 0.0;
};

/// M^α(|z|) = ∫ B(z, ω)(1 - κ·ω)^{α/2} dω.
MomentResult moment_M_alpha(const CrossSectionSpec& spec, double z, double alpha);
MomentResult moment_M_alpha(const TruncatedKernel& k, double z, double alpha);
/// Fixed-resolution variant for convergence studies (panels of 4-point Gauss-Legendre).
double moment_M_alpha_at(const TruncatedKernel& k, double z, double alpha, int panels);

/// 2π ∫_{1/n}^{theta_support} b(cos θ) sin θ dθ.
double truncated_angular_mass(const CrossSectionSpec& spec, int n);

struct AlphaGrowthRow {
  double alpha = 0.0;
  std::vector<double> radii;
  std::vector<double> ratios;  ///< M^α(z) / z^{2-α}; NaN when M^α diverges
  bool divergent = false;
  bool nonincreasing_tail = false;
};

struct AssumptionReport {
  CrossSectionSpec spec;
  int truncation_level = 0;
  bool borderline_split = false;  ///< β₀ = b when γ = -3, else B₁ = B
  MomentResult mu0;
  MomentResult angular_mu;  ///< 2π ∫ b (1 - cos θ) sin θ dθ
  bool m1_local_integrable = false;
  std::vector<double> m1_partial_sums;
  std::vector<AlphaGrowthRow> m_alpha_growth;
  bool growth_assumption_holds = false;  ///< some α has ratios decreasing toward 0
  std::vector<double> angular_partial_sums;
  bool angular_divergence = false;
  bool angular_monotone = false;
  bool grad_cutoff_1 = false;
  bool grad_cutoff_2 = false;
  std::vector<double> grad2_ratios;
  bool admissible = false;
};

/// Numeric check of the non-cutoff kernel assumptions (borderline split,
/// growth at infinity, angular singularity) and of Grad's cutoff for the
/// level-n truncation.
AssumptionReport check_assumptions(const CrossSectionSpec& spec, int truncation_level = 8);

}  // namespace boltzslab
