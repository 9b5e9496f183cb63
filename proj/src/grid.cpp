#include "boltzslab/grid.hpp"

#include "boltzslab/quadrature.hpp"

#include <algorithm>
#include <cmath>

namespace boltzslab {

VelocityGrid::VelocityGrid(int n_per_axis, double v_max) : n_(n_per_axis), v_max_(v_max) {
  if (n_per_axis < 2) throw ConfigError("grid.n_per_axis must be at least 2");
  if (!(v_max > 0.0)) throw ConfigError("grid.v_max must be positive");
  dv_ = 2.0 * v_max / n_per_axis;
  nodes_.reserve(size());
  for (int i = 0; i < n_; ++i)
    for (int j = 0; j < n_; ++j)
      for (int k = 0; k < n_; ++k) nodes_.emplace_back(coord(i), coord(j), coord(k));
}

SlabMesh::SlabMesh(double L, int cells) : length(L), n_cells(cells) {
  if (!(L > 0.0)) throw ConfigError("mesh.length must be positive");
  if (cells < 1) throw ConfigError("mesh.n_cells must be positive");
}

SphereQuadrature SphereQuadrature::graded(double theta_min, double theta_support, int n_theta, int n_azimuth) {
  if (n_theta < 1 || n_azimuth < 1) throw ConfigError("sphere quadrature needs positive node counts");
  SphereQuadrature q;
  if (theta_support > theta_min) {
    const bool panels4 = n_theta % 4 == 0;
    const int panels = panels4 ? n_theta / 4 : 1;
    const int ppp = panels4 ? 4 : n_theta;
    const QuadratureRule r = theta_min > 0.0 ? graded_gauss_legendre(theta_min, theta_support, panels, ppp)
                                             : gauss_legendre(n_theta, 0.0, theta_support);
    q.theta = r.nodes;
    q.theta_w = r.weights;
  }
  const double h = two_pi / n_azimuth;
  for (int m = 0; m < n_azimuth; ++m) {
    q.azimuth.push_back(m * h);
    q.azimuth_w.push_back(h);
  }
  return q;
}

double interpolate(const VelocityGrid& grid, std::span<const double> f, const Vec3& v) {
  const int n = grid.n_per_axis();
  constexpr double snap = 1e-9;
  int base[3];
  double t[3];
  for (int a = 0; a < 3; ++a) {
    double u = (v[a] + grid.v_max()) / grid.dv() - 0.5;
    if (u < -snap || u > n - 1 + snap) return 0.0;
    u = std::clamp(u, 0.0, static_cast<double>(n - 1));
    int i = static_cast<int>(std::floor(u));
    if (i > n - 2) i = n - 2;
    base[a] = i;
    t[a] = u - i;
  }
  double acc = 0.0;
  for (int di = 0; di < 2; ++di) {
    const double wi = di ? t[0] : 1.0 - t[0];
    for (int dj = 0; dj < 2; ++dj) {
      const double wj = wi * (dj ? t[1] : 1.0 - t[1]);
      for (int dk = 0; dk < 2; ++dk) {
        const double w = wj * (dk ? t[2] : 1.0 - t[2]);
        acc += w * f[grid.index(base[0] + di, base[1] + dj, base[2] + dk)];
      }
    }
  }
  return std::max(acc, 0.0);
}

Moments moments(const VelocityGrid& grid, std::span<const double> f) {
  Moments m;
  // pair v with -v so that even fields carry exactly zero momentum
  const int half = grid.size() / 2;
  for (int i = 0; i < half; ++i) {
    const int j = grid.mirror(i);
    m.mass += f[i] + f[j];
    m.momentum += (f[i] - f[j]) * grid.node(i);
    m.energy += (f[i] + f[j]) * grid.speed2(i);
    m.entropy += xlogx(f[i]) + xlogx(f[j]);
  }
  if (grid.size() % 2 == 1) {
    m.mass += f[half];
    m.energy += f[half] * grid.speed2(half);
    m.entropy += xlogx(f[half]);
  }
  return m.scaled(grid.weight());
}

Moments moments(const VelocityGrid& grid, const SlabMesh& mesh, const DistributionField& f) {
  Moments total;
  for (int c = 0; c < f.n_cells; ++c) total += moments(grid, f.cell(c));
  return total.scaled(mesh.dx());
}

Eigen::Matrix<double, 5, 1> invariant_sums(const VelocityGrid& grid, std::span<const double> q) {
  Eigen::Matrix<double, 5, 1> s = Eigen::Matrix<double, 5, 1>::Zero();
  for (int i = 0; i < grid.size(); ++i) {
    const Vec3& v = grid.node(i);
    s[0] += q[i];
    s[1] += v[0] * q[i];
    s[2] += v[1] * q[i];
    s[3] += v[2] * q[i];
    s[4] += grid.speed2(i) * q[i];
  }
  return s;
}

namespace {

using Mat5 = Eigen::Matrix<double, 5, 5>;
using Vec5 = Eigen::Matrix<double, 5, 1>;

Vec5 basis(const VelocityGrid& grid, int i) {
  const Vec3& v = grid.node(i);
  Vec5 b;
  b << 1.0, v[0], v[1], v[2], grid.speed2(i);
  return b;
}

Mat5 gram(const VelocityGrid& grid, std::span<const double> w) {
  Mat5 G = Mat5::Zero();
  for (int i = 0; i < grid.size(); ++i) {
    const Vec5 b = basis(grid, i);
    G.noalias() += (w.empty() ? 1.0 : w[i]) * b * b.transpose();
  }
  return G;
}

// Reciprocal condition number of a symmetric positive semidefinite matrix.
double rcond(const Mat5& G) {
  const Eigen::SelfAdjointEigenSolver<Mat5> es(G, Eigen::EigenvaluesOnly);
  const double hi = es.eigenvalues().maxCoeff();
  const double lo = es.eigenvalues().minCoeff();
  return hi > 0.0 ? lo / hi : 0.0;
}

// Scaling the |v|² column keeps the Gram matrix well-conditioned on wide lattices.
Vec5 solve(const Mat5& G, const Vec5& rhs) {
  const Vec5 d = G.diagonal().cwiseSqrt().cwiseInverse();
  const Mat5 Gs = d.asDiagonal() * G * d.asDiagonal();
  const Vec5 y = Gs.ldlt().solve(d.asDiagonal() * rhs);
  return d.asDiagonal() * y;
}

double scaled_rcond(const Mat5& G) {
  if ((G.diagonal().array() <= 0.0).any()) return 0.0;
  const Vec5 d = G.diagonal().cwiseSqrt().cwiseInverse();
  return rcond(d.asDiagonal() * G * d.asDiagonal());
}

}  // namespace

void project_conservative(const VelocityGrid& grid, std::span<double> q) {
  const Mat5 G = gram(grid, {});
  if (scaled_rcond(G) < 1e-12) throw ConfigError("conservative projection: degenerate velocity grid");
  const Vec5 c = solve(G, invariant_sums(grid, q));
  for (int i = 0; i < grid.size(); ++i) q[i] -= basis(grid, i).dot(c);
}

bool project_conservative_weighted(const VelocityGrid& grid, std::span<double> q, std::span<const double> w) {
  const Mat5 G = gram(grid, w);
  if (scaled_rcond(G) < 1e-12) {
    project_conservative(grid, q);
    return false;
  }
  const Vec5 c = solve(G, invariant_sums(grid, q));
  for (int i = 0; i < grid.size(); ++i) q[i] -= w[i] * basis(grid, i).dot(c);
  // one refinement sweep removes the roundoff left by the solve
  const Vec5 c2 = solve(G, invariant_sums(grid, q));
  for (int i = 0; i < grid.size(); ++i) q[i] -= w[i] * basis(grid, i).dot(c2);
  return true;
}

std::vector<double> maxwellian(double rho, const Vec3& u, double T, const VelocityGrid& grid) {
  if (!(T > 0.0)) throw ConfigError("maxwellian: temperature must be positive");
  if (!(rho >= 0.0)) throw ConfigError("maxwellian: density must be nonnegative");
  std::vector<double> out(grid.size());
  const double norm = rho * std::pow(two_pi * T, -1.5);
  for (int i = 0; i < grid.size(); ++i) out[i] = norm * std::exp(-(grid.node(i) - u).squaredNorm() / (2.0 * T));
  return out;
}

std::vector<double> reference_maxwellian(const VelocityGrid& grid) { return maxwellian(1.0, Vec3::Zero(), 1.0, grid); }

double relative_entropy(const VelocityGrid& grid, std::span<const double> f, std::span<const double> M) {
  double h = 0.0;
  for (int i = 0; i < grid.size(); ++i) {
    if (f[i] > 0.0)
      h += f[i] * std::log(f[i] / M[i]) - f[i] + M[i];
    else
      h += M[i];
  }
  return h * grid.weight();
}

double relative_entropy(const VelocityGrid& grid, const SlabMesh& mesh, const DistributionField& f,
                        std::span<const double> M) {
  double h = 0.0;
  for (int c = 0; c < f.n_cells; ++c) h += relative_entropy(grid, f.cell(c), M);
  return h * mesh.dx();
}

std::vector<double> moment_matched_maxwellian(const VelocityGrid& grid, std::span<const double> f) {
  const Moments target = moments(grid, f);
  if (!(target.mass > 0.0)) return std::vector<double>(grid.size(), 0.0);
  const Vec3 u_t = target.momentum / target.mass;
  const double T_t = (target.energy / target.mass - u_t.squaredNorm()) / 3.0;
  if (!(T_t > 0.0)) throw DataError("moment_matched_maxwellian: nonpositive temperature");
  double rho = target.mass;
  Vec3 u = u_t;
  double T = T_t;
  std::vector<double> M;
  // fixed-point correction so the discrete (not continuum) moments match
  for (int it = 0; it < 20; ++it) {
    M = maxwellian(rho, u, T, grid);
    const Moments m = moments(grid, M);
    const Vec3 um = m.momentum / m.mass;
    const double Tm = (m.energy / m.mass - um.squaredNorm()) / 3.0;
    rho *= target.mass / m.mass;
    u += u_t - um;
    T = std::max(0.05 * T, T + (T_t - Tm));
    if (std::abs(m.mass - target.mass) < 1e-14 * target.mass && (um - u_t).norm() < 1e-13 &&
        std::abs(Tm - T_t) < 1e-13)
      break;
  }
  return maxwellian(rho, u, T, grid);
}

double l1_distance(const VelocityGrid& grid, std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (int i = 0; i < grid.size(); ++i) s += std::abs(a[i] - b[i]);
  return s * grid.weight();
}

}  // namespace boltzslab
