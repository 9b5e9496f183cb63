#include "boltzslab/cancellation.hpp"

#include "boltzslab/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace boltzslab {

namespace {

void require_half_support(const CrossSectionSpec& spec) {
  if (spec.theta_support > pi / 2 + 1e-15)
    throw ConfigError("cancellation kernels need theta_support <= pi/2");
}

// cos^{-3}(θ/2)(z/c)^γ - z^γ = z^γ (c^{-3-γ} - 1), written to keep the
// O(θ²) cancellation accurate as θ → 0.
double dilation_factor(double gamma, double theta) {
  const double c = std::cos(0.5 * theta);
  return std::expm1(-(3.0 + gamma) * std::log(c));
}

}  // namespace

SValue s_of(const CrossSectionSpec& spec, double z) {
  if (!(z > 0.0)) throw ConfigError("s_of: z must be positive");
  require_half_support(spec);
  const RefinementResult r = integrate_to_singular_endpoint(
      [&](double theta) { return two_pi * std::sin(theta) * spec.angular(theta) * dilation_factor(spec.gamma, theta); },
      spec.theta_support);
  SValue out;
  out.divergent = !r.converged;
  out.nodes = r.nodes_used;
  const double speed = spec.speed_factor(z);
  out.value = out.divergent ? std::numeric_limits<double>::infinity() : speed * r.value;
  out.refinement_delta = speed * std::abs(r.refinement_delta);
  return out;
}

double s_of_at(const TruncatedKernel& k, double z, int panels) {
  if (!(z > 0.0)) throw ConfigError("s_of: z must be positive");
  require_half_support(k.base);
  const double lo = k.theta_min(), hi = k.base.theta_support;
  if (!(hi > lo)) return 0.0;
  // z / cos(θ/2) crosses a window edge zb at θ = 2 acos(z / zb)
  std::vector<double> breaks;
  for (double zb : {k.z_min(), k.z_max()}) {
    const double ratio = z / zb;
    if (ratio > 0.0 && ratio < 1.0) breaks.push_back(2.0 * std::acos(ratio));
  }
  const QuadratureRule rule = piecewise_gauss_legendre(lo, hi, breaks, panels, 8);
  const double gamma = k.base.gamma;
  const bool z_in = k.in_speed_window(z);
  return rule.integrate([&](double theta) {
    const double c = std::cos(0.5 * theta);
    const bool dil_in = k.in_speed_window(z / c);
    double bracket;
    if (z_in && dil_in)
      bracket = k.base.speed_factor(z) * dilation_factor(gamma, theta);
    else
      bracket = (dil_in ? std::pow(c, -3.0) * k.base.speed_factor(z / c) : 0.0) -
                (z_in ? k.base.speed_factor(z) : 0.0);
    return two_pi * std::sin(theta) * k.base.angular(theta) * bracket;
  });
}

SValue s_of(const TruncatedKernel& k, double z) {
  SValue out;
  const double coarse = s_of_at(k, z, 8);
  out.value = s_of_at(k, z, 16);
  out.refinement_delta = std::abs(out.value - coarse);
  out.nodes = 16 * 8;
  return out;
}

namespace {

template <class K>
SProfile profile_impl(const K& kernel, const std::vector<double>& radii) {
  SProfile p;
  p.radii = radii;
  for (double z : radii) {
    const SValue s = s_of(kernel, z);
    p.values.push_back(s.value);
    p.growth_ratios.push_back(s.value / (z * z));
    p.refinement_deltas.push_back(s.refinement_delta);
    p.any_divergent = p.any_divergent || s.divergent;
  }
  return p;
}

template <class K>
LocalIntegrability local_impl(const K& kernel, double r_max) {
  if (!(r_max > 0.0)) throw ConfigError("s_local_integrability: r_max must be positive");
  bool inner_divergent = false;
  const RefinementResult r = integrate_to_singular_endpoint(
      [&](double radius) {
        const SValue s = s_of(kernel, radius);
        inner_divergent = inner_divergent || s.divergent;
        return std::abs(s.value) * radius * radius;
      },
      r_max, 1e-10, 60);
  LocalIntegrability out;
  out.partial_sums = r.partial_sums;
  out.converged = r.converged && !inner_divergent;
  out.divergent = r.divergent || inner_divergent;
  out.value = r.value;
  return out;
}

}  // namespace

SProfile s_profile(const CrossSectionSpec& spec, const std::vector<double>& radii) { return profile_impl(spec, radii); }
SProfile s_profile(const TruncatedKernel& k, const std::vector<double>& radii) { return profile_impl(k, radii); }

LocalIntegrability s_local_integrability(const CrossSectionSpec& spec, double r_max) { return local_impl(spec, r_max); }
LocalIntegrability s_local_integrability(const TruncatedKernel& k, double r_max) { return local_impl(k, r_max); }

TestFunction constant_function(double c) {
  return {[c](const Vec3&) { return c; }, std::abs(c), "constant"};
}

TestFunction gaussian_function(const Vec3& center, double sigma) {
  if (!(sigma > 0.0)) throw ConfigError("gaussian_function: sigma must be positive");
  const double s2 = sigma * sigma;
  // sup|∇φ| = 1/(σ√e), sup‖∇²φ‖ = 1/σ²
  const double norm = std::max({1.0, 1.0 / (sigma * std::sqrt(std::exp(1.0))), 1.0 / s2});
  return {[center, s2](const Vec3& v) { return std::exp(-(v - center).squaredNorm() / (2.0 * s2)); }, norm,
          "gaussian"};
}

TestFunction bump_function(const Vec3& center, double radius) {
  if (!(radius > 0.0)) throw ConfigError("bump_function: radius must be positive");
  const double r2 = radius * radius;
  // sup|∇φ| = (6/√5)(16/25)/R ≈ 1.71730/R, sup‖∇²φ‖ = 6/R²
  const double norm = std::max({1.0, 1.7174 / radius, 6.0 / r2});
  return {[center, r2](const Vec3& v) {
            const double u = 1.0 - (v - center).squaredNorm() / r2;
            return u > 0.0 ? u * u * u : 0.0;
          },
          norm, "bump"};
}

std::vector<TestFunction> standard_battery() {
  std::vector<TestFunction> b;
  const Vec3 centers[5] = {{0, 0, 0}, {1, 0, 0}, {-0.5, 1, 0.3}, {0.2, -0.7, 1.1}, {2, 1, -1}};
  const double sigmas[5] = {0.7, 1.0, 1.5, 2.0, 3.0};
  const double radii[5] = {1.5, 2.0, 2.5, 3.0, 4.0};
  for (int i = 0; i < 5; ++i) b.push_back(gaussian_function(centers[i], sigmas[i]));
  for (int i = 0; i < 5; ++i) b.push_back(bump_function(centers[4 - i], radii[i]));
  return b;
}

namespace {

struct Frame {
  Vec3 kappa, e1, e2;
};

Frame frame_for(const Vec3& z) {
  Frame f;
  f.kappa = z.normalized();
  int axis = 0;
  for (int a = 1; a < 3; ++a)
    if (std::abs(f.kappa[a]) < std::abs(f.kappa[axis])) axis = a;
  Vec3 ea = Vec3::Zero();
  ea[axis] = 1.0;
  f.e1 = f.kappa.cross(ea).normalized();
  f.e2 = f.kappa.cross(f.e1);
  return f;
}

QuadratureRule t_theta_rule(const TruncatedKernel& k, int n_theta) {
  const double lo = k.theta_min(), hi = k.base.theta_support;
  if (!(hi > lo)) return {};
  const bool panels4 = n_theta % 4 == 0;
  return graded_gauss_legendre(lo, hi, panels4 ? n_theta / 4 : 1, panels4 ? 4 : n_theta);
}

}  // namespace

TEvaluator::TEvaluator(const TruncatedKernel& k, const TQuadrature& quad) : k_(k) {
  const QuadratureRule rule = t_theta_rule(k, quad.n_theta);
  const double dphi = two_pi / quad.n_azimuth;
  for (std::size_t t = 0; t < rule.size(); ++t) {
    const double theta = rule.nodes[t];
    ct_.push_back(std::cos(theta));
    st_.push_back(std::sin(theta));
    w_.push_back(rule.weights[t] * std::sin(theta) * k.base.angular(theta) * dphi);
  }
  for (int m = 0; m < quad.n_azimuth; ++m) {
    cphi_.push_back(std::cos(m * dphi));
    sphi_.push_back(std::sin(m * dphi));
  }
}

double TEvaluator::operator()(const TestFunction& phi, const Vec3& v, const Vec3& v_star) const {
  const Vec3 zv = v - v_star;
  const double z = zv.norm();
  if (z == 0.0 || !k_.in_speed_window(z)) return 0.0;
  const Frame fr = frame_for(zv);
  const Vec3 mid = 0.5 * (v + v_star);
  const double phi_v = phi.eval(v);
  double total = 0.0;
  for (std::size_t t = 0; t < w_.size(); ++t) {
    double az = 0.0;
    for (std::size_t m = 0; m < cphi_.size(); ++m) {
      const Vec3 omega = ct_[t] * fr.kappa + st_[t] * (cphi_[m] * fr.e1 + sphi_[m] * fr.e2);
      az += phi.eval(mid + 0.5 * z * omega) - phi_v;
    }
    total += w_[t] * az;
  }
  return k_.base.speed_factor(z) * total;
}

double t_of(const TruncatedKernel& k, const TestFunction& phi, const Vec3& v, const Vec3& v_star,
            const TQuadrature& quad) {
  return TEvaluator(k, quad)(phi, v, v_star);
}

double m2_on_nodes(const TruncatedKernel& k, double z, const TQuadrature& quad) {
  if (!k.in_speed_window(z)) return 0.0;
  const QuadratureRule rule = t_theta_rule(k, quad.n_theta);
  double total = 0.0;
  for (std::size_t t = 0; t < rule.size(); ++t) {
    const double theta = rule.nodes[t];
    total += rule.weights[t] * std::sin(theta) * k.base.angular(theta) * 2.0 * std::pow(std::sin(0.5 * theta), 2);
  }
  return two_pi * k.base.speed_factor(z) * total;
}

std::vector<VelocityPair> sample_pairs(int count, std::uint64_t seed, double half_width) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(-half_width, half_width);
  std::vector<VelocityPair> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) {
    VelocityPair p;
    p.v = Vec3(U(rng), U(rng), U(rng));
    p.v_star = Vec3(U(rng), U(rng), U(rng));
    out.push_back(p);
  }
  return out;
}

TBoundReport verify_t_bound(const TruncatedKernel& k, const std::vector<TestFunction>& battery,
                            const std::vector<VelocityPair>& pairs, const TQuadrature& quad) {
  if (battery.empty()) throw ConfigError("verify_t_bound: empty test-function battery");
  TBoundReport rep;
  rep.quad = quad;
  for (const auto& p : pairs) {
    const double z = (p.v - p.v_star).norm();
    const double m2 = m2_on_nodes(k, z, quad);
    for (const auto& phi : battery) {
      const double t = t_of(k, phi, p.v, p.v_star, quad);
      ++rep.evaluations;
      const double scale = phi.w2inf_norm * z * (1.0 + z) * m2;
      if (scale == 0.0) {
        if (t != 0.0) throw InvariantError("verify_t_bound: T(phi) nonzero where M2 vanishes");
        continue;
      }
      const double ratio = std::abs(t) / scale;
      rep.fitted_C = std::max(rep.fitted_C, ratio);
      if (ratio > rep.theory_C * (1.0 + 1e-12)) ++rep.violations;
    }
  }
  return rep;
}

}  // namespace boltzslab
