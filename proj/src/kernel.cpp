#include "boltzslab/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace boltzslab {

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

double one_minus_cos(double theta) {
  const double s = std::sin(0.5 * theta);
  return 2.0 * s * s;
}

double tabulated_angular(const CrossSectionSpec& spec, double theta) {
  const auto& t = spec.table_theta;
  const auto& b = spec.table_b;
  if (t.size() == 1) return b.front();
  auto power_law = [&](std::size_t i, std::size_t j) {
    const double slope = std::log(b[j] / b[i]) / std::log(t[j] / t[i]);
    return b[i] * std::pow(theta / t[i], slope);
  };
  if (theta <= t.front()) return power_law(0, 1);
  if (theta >= t.back()) return power_law(t.size() - 2, t.size() - 1);
  const auto it = std::upper_bound(t.begin(), t.end(), theta);
  const std::size_t j = static_cast<std::size_t>(it - t.begin());
  return power_law(j - 1, j);
}

}  // namespace

std::string to_string(KernelKind kind) {
  switch (kind) {
    case KernelKind::InversePower: return "inverse-power";
    case KernelKind::HardSphere: return "hard-sphere";
    case KernelKind::Tabulated: return "tabulated";
  }
  return "unknown";
}

KernelKind kernel_kind_from_string(const std::string& name) {
  if (name == "inverse-power") return KernelKind::InversePower;
  if (name == "hard-sphere") return KernelKind::HardSphere;
  if (name == "tabulated") return KernelKind::Tabulated;
  throw ConfigError("unknown kernel kind '" + name + "'");
}

CrossSectionSpec CrossSectionSpec::inverse_power(double s, double K, double theta_support) {
  if (!(s > 1.0)) throw ConfigError("inverse-power kernel needs s > 1");
  if (!(K >= 0.0)) throw ConfigError("kernel amplitude K must be nonnegative");
  if (!(theta_support > 0.0 && theta_support <= pi))
    throw ConfigError("theta_support must lie in (0, pi]");
  CrossSectionSpec spec;
  spec.kind = KernelKind::InversePower;
  spec.s = s;
  spec.K = K;
  spec.gamma = (s - 5.0) / (s - 1.0);
  spec.sprime = 2.0 / (s - 1.0);
  spec.theta_support = theta_support;
  return spec;
}

CrossSectionSpec CrossSectionSpec::hard_sphere(double theta_support) {
  if (!(theta_support > 0.0 && theta_support <= pi))
    throw ConfigError("theta_support must lie in (0, pi]");
  CrossSectionSpec spec;
  spec.kind = KernelKind::HardSphere;
  spec.s = std::numeric_limits<double>::infinity();
  spec.K = 1.0 / (4.0 * pi);
  spec.gamma = 1.0;
  spec.sprime = 0.0;
  spec.theta_support = theta_support;
  return spec;
}

CrossSectionSpec CrossSectionSpec::tabulated(std::vector<double> theta, std::vector<double> b,
                                             double gamma, double theta_support) {
  if (theta.empty() || theta.size() != b.size())
    throw ConfigError("tabulated kernel needs matching, nonempty theta/b tables");
  for (std::size_t i = 0; i < theta.size(); ++i) {
    if (!(theta[i] > 0.0) || !(b[i] > 0.0))
      throw ConfigError("tabulated kernel samples must be positive");
    if (i > 0 && !(theta[i] > theta[i - 1]))
      throw ConfigError("tabulated kernel angles must be increasing");
  }
  if (!(theta_support > 0.0 && theta_support <= pi))
    throw ConfigError("theta_support must lie in (0, pi]");
  CrossSectionSpec spec;
  spec.kind = KernelKind::Tabulated;
  spec.table_theta = std::move(theta);
  spec.table_b = std::move(b);
  spec.gamma = gamma;
  spec.theta_support = theta_support;
  spec.s = std::numeric_limits<double>::quiet_NaN();
  spec.K = std::numeric_limits<double>::quiet_NaN();
  if (spec.table_theta.size() >= 2) {
    // sin θ b ≈ K θ^{-1-s'} near 0
    const double t0 = spec.table_theta[0], t1 = spec.table_theta[1];
    const double slope = std::log(std::sin(t1) * spec.table_b[1] / (std::sin(t0) * spec.table_b[0])) /
                         std::log(t1 / t0);
    spec.sprime = std::max(0.0, -1.0 - slope);
    spec.K = std::sin(t0) * spec.table_b[0] * std::pow(t0, 1.0 + spec.sprime);
  } else {
    spec.sprime = 0.0;
  }
  return spec;
}

bool CrossSectionSpec::admissible() const {
  return gamma >= -3.0 && sprime >= 0.0 && sprime < 2.0 && sprime + gamma < 2.0;
}

double CrossSectionSpec::angular(double theta) const {
  if (theta > theta_support || theta < 0.0) return 0.0;
  switch (kind) {
    case KernelKind::InversePower: {
      if (K == 0.0) return 0.0;
      const double st = std::sin(theta);
      if (theta == 0.0 || st <= 0.0) return inf;
      return K * std::pow(theta, -1.0 - sprime) / st;
    }
    case KernelKind::HardSphere:
      return 1.0 / (4.0 * pi);
    case KernelKind::Tabulated:
      if (theta == 0.0) return sprime > 0.0 ? inf : table_b.front();
      return tabulated_angular(*this, theta);
  }
  return 0.0;
}

double CrossSectionSpec::speed_factor(double z) const {
  if (gamma == 0.0) return 1.0;
  if (z == 0.0) return gamma < 0.0 ? inf : 0.0;
  return std::pow(z, gamma);
}

double eval_kernel_theta(const CrossSectionSpec& spec, double z, double theta) {
  const double a = spec.angular(theta);
  if (a == 0.0) return 0.0;
  const double v = spec.speed_factor(z);
  if (v == 0.0) return 0.0;
  return v * a;
}

double eval_kernel(const CrossSectionSpec& spec, double z, double cos_theta) {
  if (!(z >= 0.0)) throw ConfigError("eval_kernel: relative speed must be nonnegative");
  if (!(cos_theta >= -1.0 && cos_theta <= 1.0))
    throw ConfigError("eval_kernel: cos(theta) must lie in [-1, 1]");
  return eval_kernel_theta(spec, z, std::acos(cos_theta));
}

TruncatedKernel::TruncatedKernel(CrossSectionSpec spec, int level, bool damp)
    : base(std::move(spec)), n(level), damping(damp) {
  if (level < 1) throw ConfigError("truncation level n must be a positive integer");
}

double eval_truncated_theta(const TruncatedKernel& k, double z, double theta) {
  if (!k.in_speed_window(z) || theta < k.theta_min()) return 0.0;
  return eval_kernel_theta(k.base, z, theta);
}

double eval_truncated(const TruncatedKernel& k, double z, double cos_theta) {
  if (!(z >= 0.0)) throw ConfigError("eval_truncated: relative speed must be nonnegative");
  if (!(cos_theta >= -1.0 && cos_theta <= 1.0))
    throw ConfigError("eval_truncated: cos(theta) must lie in [-1, 1]");
  return eval_truncated_theta(k, z, std::acos(cos_theta));
}

MomentResult moment_M_alpha(const CrossSectionSpec& spec, double z, double alpha) {
  if (!(z > 0.0)) throw ConfigError("moment_M_alpha: z must be positive");
  if (!(alpha >= 0.0 && alpha <= 2.0)) throw ConfigError("moment_M_alpha: alpha must lie in [0, 2]");
  const double speed = spec.speed_factor(z);
  auto integrand = [&](double theta) {
    return two_pi * spec.angular(theta) * std::pow(one_minus_cos(theta), 0.5 * alpha) *
           std::sin(theta);
  };
  const RefinementResult r = integrate_to_singular_endpoint(integrand, spec.theta_support);
  MomentResult out;
  out.divergent = r.divergent || !r.converged;
  out.converged = r.converged;
  out.nodes = r.nodes_used;
  out.refinement_delta = r.refinement_delta * speed;
  out.value = out.divergent ? std::numeric_limits<double>::infinity() : speed * r.value;
  return out;
}

double moment_M_alpha_at(const TruncatedKernel& k, double z, double alpha, int panels) {
  if (!(z > 0.0)) throw ConfigError("moment_M_alpha: z must be positive");
  if (!k.in_speed_window(z)) return 0.0;
  const double lo = k.theta_min(), hi = k.base.theta_support;
  if (!(hi > lo)) return 0.0;
  const QuadratureRule rule = graded_gauss_legendre(lo, hi, panels, 4);
  const double speed = k.base.speed_factor(z);
  return speed * rule.integrate([&](double theta) {
    return two_pi * k.base.angular(theta) * std::pow(one_minus_cos(theta), 0.5 * alpha) *
           std::sin(theta);
  });
}

MomentResult moment_M_alpha(const TruncatedKernel& k, double z, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 2.0)) throw ConfigError("moment_M_alpha: alpha must lie in [0, 2]");
  MomentResult out;
  const double coarse = moment_M_alpha_at(k, z, alpha, 16) ;
  // 4-point panels: 16 -> 32 panels
  const double fine = moment_M_alpha_at(k, z, alpha, 32);
  out.value = fine;
  out.nodes = 32 * 4;
  out.refinement_delta = std::abs(fine - coarse);
  return out;
}

double truncated_angular_mass(const CrossSectionSpec& spec, int n) {
  if (n < 1) throw ConfigError("truncated_angular_mass: n must be >= 1");
  const double lo = 1.0 / n, hi = spec.theta_support;
  if (!(hi > lo)) return 0.0;
  const QuadratureRule rule = graded_gauss_legendre(lo, hi, 32, 8);
  return rule.integrate([&](double theta) { return two_pi * spec.angular(theta) * std::sin(theta); });
}

AssumptionReport check_assumptions(const CrossSectionSpec& spec, int truncation_level) {
  if (spec.kind == KernelKind::Tabulated &&
      (spec.table_theta.size() < 2 || spec.table_theta.front() > 1e-2))
    throw ConfigError(
        "insufficient resolution: tabulated kernel needs at least two samples with the first at "
        "theta <= 1e-2");
  AssumptionReport rep;
  rep.spec = spec;
  rep.truncation_level = truncation_level;
  rep.admissible = spec.admissible();
  rep.borderline_split = std::abs(spec.gamma + 3.0) < 1e-12;

  auto angular_integral = [&](double alpha_exponent) {
    return integrate_to_singular_endpoint(
        [&](double theta) {
          return two_pi * spec.angular(theta) * std::pow(one_minus_cos(theta), alpha_exponent) *
                 std::sin(theta);
        },
        spec.theta_support);
  };

  {
    const RefinementResult r = angular_integral(1.0);
    rep.angular_mu.value = r.converged ? r.value : std::numeric_limits<double>::infinity();
    rep.angular_mu.divergent = !r.converged;
    rep.angular_mu.converged = r.converged;
    rep.angular_mu.nodes = r.nodes_used;
    rep.angular_mu.refinement_delta = r.refinement_delta;
  }
  if (rep.borderline_split) {
    rep.mu0 = rep.angular_mu;
    rep.m1_local_integrable = true;
    rep.m1_partial_sums = {0.0};
  } else {
    rep.mu0 = MomentResult{0.0, false, true, 0, 0.0};
    if (rep.angular_mu.divergent) {
      rep.m1_local_integrable = false;
    } else {
      // M1(r) = r^γ μ_b; local integrability in R^3 is that of r^{γ+2} near 0
      const double mu_b = rep.angular_mu.value;
      const RefinementResult r = integrate_to_singular_endpoint(
          [&](double radius) { return 4.0 * pi * spec.speed_factor(radius) * mu_b * radius * radius; },
          1.0);
      rep.m1_local_integrable = r.converged;
      rep.m1_partial_sums = r.partial_sums;
    }
  }

  const std::vector<double> radii{1.0, 10.0, 100.0, 1000.0};
  for (double alpha : {0.0, 0.5, 1.0, 1.5, 2.0}) {
    AlphaGrowthRow row;
    row.alpha = alpha;
    row.radii = radii;
    for (double z : radii) {
      const MomentResult m = moment_M_alpha(spec, z, alpha);
      if (m.divergent) {
        row.divergent = true;
        row.ratios.push_back(std::numeric_limits<double>::quiet_NaN());
      } else {
        row.ratios.push_back(m.value / std::pow(z, 2.0 - alpha));
      }
    }
    if (!row.divergent) {
      bool dec = true;
      for (std::size_t i = 2; i < row.ratios.size(); ++i) dec = dec && row.ratios[i] < row.ratios[i - 1];
      row.nonincreasing_tail = dec && row.ratios.back() < row.ratios[1];
    }
    rep.growth_assumption_holds = rep.growth_assumption_holds || row.nonincreasing_tail;
    rep.m_alpha_growth.push_back(std::move(row));
  }

  {
    const RefinementResult r = angular_integral(0.0);
    rep.angular_partial_sums = r.partial_sums;
    rep.angular_divergence = r.divergent;
    bool mono = true;
    for (std::size_t i = 1; i < r.partial_sums.size(); ++i)
      mono = mono && r.partial_sums[i] > r.partial_sums[i - 1];
    rep.angular_monotone = mono;
  }

  // Grad's cutoff for the level-n truncation: A_n(z) = |z|^γ 1[window] * angular mass.
  const TruncatedKernel tk(spec, truncation_level);
  const double mass_n = truncated_angular_mass(spec, truncation_level);
  auto A_n = [&](double r) { return tk.speed_factor(r) * mass_n; };
  {
    const QuadratureRule rule = graded_gauss_legendre(tk.z_min(), tk.z_max(), 32, 8);
    const double local = rule.integrate([&](double r) { return 4.0 * pi * A_n(r) * r * r; });
    rep.grad_cutoff_1 = std::isfinite(local);
  }
  {
    constexpr double R = 1.0;
    bool dec = true;
    for (double d : {10.0, 100.0, 1000.0, 10000.0}) {
      // ball of radius R at distance d: spherical shells contribute cap areas π r (R² - (d-r)²)/d
      const QuadratureRule rule = piecewise_gauss_legendre(d - R, d + R, {tk.z_min(), tk.z_max()}, 4, 8);
      const double ball = rule.integrate(
          [&](double r) { return A_n(r) * pi * r * (R * R - (d - r) * (d - r)) / d; });
      const double ratio = ball / (1.0 + d * d);
      if (!rep.grad2_ratios.empty()) dec = dec && ratio <= rep.grad2_ratios.back();
      rep.grad2_ratios.push_back(ratio);
    }
    rep.grad_cutoff_2 = dec && rep.grad2_ratios.back() <= 1e-2 * rep.grad2_ratios.front() + 1e-300;
  }
  return rep;
}

}  // namespace boltzslab
