#pragma once

#include "boltzslab/cancellation.hpp"
#include "boltzslab/collision.hpp"
#include "boltzslab/transport.hpp"

#include <string>
#include <vector>

namespace boltzslab {

/// β(f) = log(1 + δf)/δ: β(0) = 0, β'' < 0, 0 < β'(f) ≤ C/(1+f) with C = max(1, 1/δ).
struct BetaFunction {
  double delta = 1.0;

  explicit BetaFunction(double d = 1.0);
  double operator()(double f) const { return std::log1p(delta * f) / delta; }
  double prime(double f) const { return 1.0 / (1.0 + delta * f); }
  double second(double f) const {
    const double u = 1.0 + delta * f;
    return -delta / (u * u);
  }
  double C() const { return std::max(1.0, 1.0 / delta); }
  Renormalizer renormalizer() const;
};

/// (f * 𝒮)(v_i) = Σ_j f_j 𝒮(|v_i - v_j|) dv³ with 𝒮 of the truncated kernel
/// tabulated on the lattice distances.
class SConvolution {
 public:
  SConvolution(const VelocityGrid& grid, const TruncatedKernel& kernel);
  std::vector<double> apply(std::span<const double> f) const;
  double at_d2(int d2) const { return table_[d2]; }

 private:
  VelocityGrid grid_;
  std::vector<double> table_;
};

/// damping·(fβ'(f) - β(f))·(f * 𝒮).
std::vector<double> compute_R1(const CollisionOperator& op, const SConvolution& s, std::span<const double> f,
                               const BetaFunction& beta);

/// damping Σ_{i,j} f_j β(f_i) 𝒯(φ)(v_i, v_j) dv⁶.
double compute_R2_weak(const CollisionOperator& op, std::span<const double> f, const BetaFunction& beta,
                       const TestFunction& phi, const TQuadrature& tq);

struct R3SignReport {
  long long terms = 0;             ///< quadrature terms visited
  long long positive = 0;          ///< brackets above the roundoff tolerance
  long long nodal_terms = 0;       ///< terms whose v' is a lattice node
  long long nodal_positive = 0;
  double max_bracket = -std::numeric_limits<double>::infinity();
};

/// Per-node fields from one ordered sweep over the collision sum:
///   r2[i] = damping Σ w B_n [f(v_*')β(f(v')) - f_j β(f_i)] dv³   (direct route)
///   r3[i] = damping Σ w B_n f(v_*')[β(f(v')) - β(f_i) - β'(f_i)(f(v') - f_i)] dv³  (≤ 0)
struct RenormFields {
  std::vector<double> r2, r3;
  R3SignReport sign;
};
RenormFields compute_R2_R3(const CollisionOperator& op, std::span<const double> f, const BetaFunction& beta);

/// R3 alone (same sweep as compute_R2_R3).
RenormFields compute_R3(const CollisionOperator& op, std::span<const double> f, const BetaFunction& beta);

struct DecompositionRow {
  std::string label;
  double lhs = 0.0;        ///< ⟨β'(f) Q_raw, φ⟩
  double r1 = 0.0;         ///< ⟨R1, φ⟩ via 𝒮
  double r2_weak = 0.0;    ///< via 𝒯(φ)
  double r2_direct = 0.0;  ///< ⟨R2, φ⟩ from the direct sphere sum
  double r3 = 0.0;         ///< ⟨R3, φ⟩ (≤ 0 for φ ≥ 0)
  /// lhs - (r1 + r2_weak - r3): β'Q = R1 + R2 - R3 with the nonpositive R3 above.
  double residual = 0.0;
  double scale = 0.0;      ///< |lhs| + |r1| + |r2_weak| + |r3|
};

struct DecompositionReport {
  std::vector<DecompositionRow> rows;
  R3SignReport sign;
  double max_residual = 0.0;
  TQuadrature tq;
};

DecompositionReport decomposition_identity_check(const CollisionOperator& op, std::span<const double> f,
                                                 const BetaFunction& beta, const std::vector<TestFunction>& battery,
                                                 const TQuadrature& tq);

/// Quadratic x-bump 4x(L-x)/L² times (1 - |v|²/R²)³ for R ∈ {2, 4, v_max}.
std::vector<SlabTestFunction> renorm_psi_battery(const SlabMesh& mesh, const VelocityGrid& grid);

struct RenormResidualRow {
  std::string label;
  double residual = 0.0;  ///< RHS - LHS of the weak inequality (the defect; ≥ 0 up to discretisation)
  double scale = 0.0;
  /// Σ over collision phases of ∫∫ [β(f + Δ) - β(f) - β'(f)Δ] ψ: the part of
  /// the residual owed to stepping a concave β in time (≤ 0). The transport
  /// phases alone leave residual - collision_jensen ≥ 0.
  double collision_jensen = 0.0;
};

std::vector<RenormResidualRow> renormalized_residual(const VelocityGrid& grid, const SlabMesh& mesh,
                                                     const EvolutionLog& log, const BetaFunction& beta,
                                                     const std::vector<SlabTestFunction>& battery);

/// Smooth cutoff: 1 on B_R, 0 outside B_2R, C² in between.
TestFunction ball_cutoff(double R);

struct NormReport {
  std::vector<double> radii;
  std::vector<double> r1_sup;       ///< sup_t ‖R1(t)‖_{L¹(Ω × B_R)}
  std::vector<double> r2_sup;       ///< sup_t |⟨R2(t), φ_R⟩| / ‖φ_R‖_{W^{2,∞}}
  std::vector<double> r3_integral;  ///< ∫_0^T ∫∫ |R3| φ_R (trapezoid over snapshots)
  std::vector<double> r3_bound;     ///< |A1| + |A2| + A3 + A4 + boundary mass flux
  std::vector<double> times;
};

/// Norms over stored snapshots; the R3 bound uses only the R1/R2 pairings, β of
/// the end states and the ledger mass fluxes, as in the L¹ estimate for R3.
NormReport lemma_norm_report(const CollisionOperator& op, const SConvolution& s, const SlabMesh& mesh,
                             const std::vector<DistributionField>& snapshots, const FluxLedger& ledger,
                             const BetaFunction& beta);

}  // namespace boltzslab
