#pragma once

#include <functional>
#include <vector>

namespace boltzslab {

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;

  std::size_t size() const { return nodes.size(); }
  template <class F>
  double integrate(F&& f) const {
    double s = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) s += weights[i] * f(nodes[i]);
    return s;
  }
};

/// Gauss-Legendre rule with `n` points on [a, b].
QuadratureRule gauss_legendre(int n, double a = -1.0, double b = 1.0);

/// Gauss-Legendre panels on a geometric mesh of [a, b] accumulating at `a`
/// (panel edges a*(b/a)^(i/panels)). Requires 0 < a < b.
QuadratureRule graded_gauss_legendre(double a, double b, int panels, int points_per_panel);

/// Composite Gauss-Legendre on [a, b] split at the given interior breakpoints,
/// each piece geometrically graded toward its left end when it starts above 0.
QuadratureRule piecewise_gauss_legendre(double a, double b, std::vector<double> breaks, int panels,
                                        int points_per_panel);

/// Outcome of a refinement study for an integral that may diverge.
struct RefinementResult {
  double value = 0.0;
  bool converged = false;
  bool divergent = false;
  std::vector<double> partial_sums;  ///< one entry per refinement level
  int nodes_used = 0;
  double refinement_delta = 0.0;  ///< change produced by the last refinement
};

/// Integrates f over (0, upper] when f may be singular at 0. The lower cutoff
/// shrinks by a factor 16 per level. Divergence is declared after three
/// successive levels each growing the partial sum by at least 10%; convergence
/// when the geometric tail estimate drops below rel_tol of the partial sum.
RefinementResult integrate_to_singular_endpoint(const std::function<double(double)>& f,
                                                double upper, double rel_tol = 1e-11,
                                                int max_levels = 80);

}  // namespace boltzslab
