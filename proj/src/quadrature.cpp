#include "boltzslab/quadrature.hpp"

#include "boltzslab/common.hpp"

#include <algorithm>
#include <cmath>

namespace boltzslab {

QuadratureRule gauss_legendre(int n, double a, double b) {
  if (n < 1) throw ConfigError("gauss_legendre: need at least one node");
  QuadratureRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (b + a);
  const int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
    // Newton on P_n starting from the Chebyshev-like guess.
    double x = std::cos(pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = mid - half * x;
    rule.nodes[n - 1 - i] = mid + half * x;
    rule.weights[i] = half * w;
    rule.weights[n - 1 - i] = half * w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = mid;
  return rule;
}

QuadratureRule graded_gauss_legendre(double a, double b, int panels, int points_per_panel) {
  if (!(a > 0.0) || !(b > a)) throw ConfigError("graded_gauss_legendre: need 0 < a < b");
  if (panels < 1) throw ConfigError("graded_gauss_legendre: need at least one panel");
  QuadratureRule rule;
  rule.nodes.reserve(static_cast<std::size_t>(panels) * points_per_panel);
  rule.weights.reserve(rule.nodes.capacity());
  const double ratio = b / a;
  double left = a;
  for (int p = 1; p <= panels; ++p) {
    const double right = p == panels ? b : a * std::pow(ratio, static_cast<double>(p) / panels);
    const QuadratureRule piece = gauss_legendre(points_per_panel, left, right);
    rule.nodes.insert(rule.nodes.end(), piece.nodes.begin(), piece.nodes.end());
    rule.weights.insert(rule.weights.end(), piece.weights.begin(), piece.weights.end());
    left = right;
  }
  return rule;
}

QuadratureRule piecewise_gauss_legendre(double a, double b, std::vector<double> breaks, int panels,
                                        int points_per_panel) {
  QuadratureRule rule;
  if (!(b > a)) return rule;
  breaks.erase(std::remove_if(breaks.begin(), breaks.end(),
                              [&](double x) { return !(x > a && x < b); }),
               breaks.end());
  std::sort(breaks.begin(), breaks.end());
  breaks.insert(breaks.begin(), a);
  breaks.push_back(b);
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    const double lo = breaks[i], hi = breaks[i + 1];
    if (!(hi > lo)) continue;
    const QuadratureRule piece = lo > 0.0 ? graded_gauss_legendre(lo, hi, panels, points_per_panel)
                                          : gauss_legendre(panels * points_per_panel, lo, hi);
    rule.nodes.insert(rule.nodes.end(), piece.nodes.begin(), piece.nodes.end());
    rule.weights.insert(rule.weights.end(), piece.weights.begin(), piece.weights.end());
  }
  return rule;
}

RefinementResult integrate_to_singular_endpoint(const std::function<double(double)>& f,
                                                double upper, double rel_tol, int max_levels) {
  constexpr double shrink = 16.0;
  constexpr int panels = 4;
  constexpr int points = 8;
  RefinementResult out;
  double sum = 0.0;
  double prev_delta = 0.0;
  double prev_ratio = -1.0;
  int grow_streak = 0;
  int stable_ratio_streak = 0;
  double hi = upper;
  for (int level = 0; level < max_levels; ++level) {
    const double lo = hi / shrink;
    const QuadratureRule slice = graded_gauss_legendre(lo, hi, panels, points);
    const double delta = slice.integrate(f);
    out.nodes_used += static_cast<int>(slice.size());
    const double previous = sum;
    sum += delta;
    out.partial_sums.push_back(sum);
    out.refinement_delta = delta;
    hi = lo;
    if (!std::isfinite(sum)) {
      out.divergent = true;
      break;
    }
    if (level == 0) {
      prev_delta = delta;
      continue;
    }
    if (previous != 0.0 && std::abs(sum) >= 1.1 * std::abs(previous)) {
      if (++grow_streak >= 3) {
        out.divergent = true;
        break;
      }
    } else {
      grow_streak = 0;
    }
    if (delta == 0.0 && prev_delta == 0.0) {
      out.converged = true;
      break;
    }
    if (prev_delta != 0.0) {
      const double ratio = std::abs(delta / prev_delta);
      if (ratio < 1.0) {
        const double tail = std::abs(delta) * ratio / (1.0 - ratio);
        stable_ratio_streak =
            (prev_ratio > 0.0 && std::abs(ratio - prev_ratio) < 1e-6 * ratio) ? stable_ratio_streak + 1
                                                                               : 0;
        if (tail <= rel_tol * std::abs(sum) || (stable_ratio_streak >= 3 && ratio < 0.95)) {
          out.converged = true;
          sum += std::copysign(tail, delta);
          break;
        }
      } else {
        stable_ratio_streak = 0;
      }
      prev_ratio = ratio;
    }
    prev_delta = delta;
  }
  out.value = sum;
  return out;
}

}  // namespace boltzslab
