#pragma once

#include "boltzslab/common.hpp"
#include "boltzslab/kernel.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace boltzslab {

/// 𝒮(|z|) with its quadrature metadata.
struct SValue {
  double value = 0.0;
  bool divergent = false;
  int nodes = 0;
  double refinement_delta = 0.0;
};

/// 𝒮(z) = 2π ∫_0^{π/2} sin θ [cos^{-3}(θ/2) B(z / cos(θ/2), θ) - B(z, θ)] dθ.
/// Requires theta_support <= π/2.
SValue s_of(const CrossSectionSpec& spec, double z);
SValue s_of(const TruncatedKernel& k, double z);
/// Truncated 𝒮 at a fixed resolution (`panels` graded panels of 8 points per smooth piece).
double s_of_at(const TruncatedKernel& k, double z, int panels);

struct SProfile {
  std::vector<double> radii;
  std::vector<double> values;
  std::vector<double> growth_ratios;  ///< 𝒮(z)/z²
  std::vector<double> refinement_deltas;
  bool any_divergent = false;
};

SProfile s_profile(const CrossSectionSpec& spec, const std::vector<double>& radii);
SProfile s_profile(const TruncatedKernel& k, const std::vector<double>& radii);

struct LocalIntegrability {
  double value = 0.0;
  bool converged = false;
  bool divergent = false;
  std::vector<double> partial_sums;
};

/// ∫_0^{r_max} |𝒮(r)| r² dr by refinement toward r = 0.
LocalIntegrability s_local_integrability(const CrossSectionSpec& spec, double r_max);
LocalIntegrability s_local_integrability(const TruncatedKernel& k, double r_max);

/// A test function with a caller-supplied bound on sup|φ|, sup|∇φ| and the
/// operator norm of ∇²φ.
struct TestFunction {
  std::function<double(const Vec3&)> eval;
  double w2inf_norm = 1.0;
  std::string label;
};

TestFunction constant_function(double c);
/// exp(-|v-c|²/(2σ²)).
TestFunction gaussian_function(const Vec3& center, double sigma);
/// (1 - |v-c|²/R²)³ on the ball of radius R, 0 outside (C² with compact support).
TestFunction bump_function(const Vec3& center, double radius);
/// Five Gaussians and five bumps with fixed centres and widths.
std::vector<TestFunction> standard_battery();

/// θ and azimuth resolution of the 𝒯 sphere sum.
struct TQuadrature {
  int n_theta = 32;
  int n_azimuth = 8;
};

/// 𝒯(φ)(v, v_*) = ∫ B_n(|z|, κ·ω)(φ(v') - φ(v)) dω, v' = (v+v_*)/2 + |z|ω/2.
double t_of(const TruncatedKernel& k, const TestFunction& phi, const Vec3& v, const Vec3& v_star,
            const TQuadrature& quad = {});
/// 𝒯 with the θ rule, angular weights and azimuth table built once, for
/// repeated evaluation over many velocity pairs.
class TEvaluator {
 public:
  explicit TEvaluator(const TruncatedKernel& k, const TQuadrature& quad = {});
  double operator()(const TestFunction& phi, const Vec3& v, const Vec3& v_star) const;

 private:
  TruncatedKernel k_;
  std::vector<double> ct_, st_, w_;  // per θ node; w_ = w_θ sin θ b(θ) Δφ
  std::vector<double> cphi_, sphi_;
};

/// M²(|z|) = ∫ B_n (1 - κ·ω) dω on the same θ nodes t_of uses.
double m2_on_nodes(const TruncatedKernel& k, double z, const TQuadrature& quad = {});

struct VelocityPair {
  Vec3 v, v_star;
};
/// Uniform pairs in [-half_width, half_width]^3 from a seeded generator.
std::vector<VelocityPair> sample_pairs(int count, std::uint64_t seed, double half_width = 4.0);

struct TBoundReport {
  double fitted_C = 0.0;        ///< max |𝒯| / (‖φ‖ |z|(1+|z|) M²(|z|))
  double theory_C = 0.5;        ///< constant from the second-order Taylor bound
  int violations = 0;           ///< samples exceeding theory_C (with 1e-12 slack)
  int evaluations = 0;
  TQuadrature quad;
};

TBoundReport verify_t_bound(const TruncatedKernel& k, const std::vector<TestFunction>& battery,
                            const std::vector<VelocityPair>& pairs, const TQuadrature& quad = {});

}  // namespace boltzslab
