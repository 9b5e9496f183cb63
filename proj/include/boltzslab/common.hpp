#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace boltzslab {

using Vec3 = Eigen::Vector3d;

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;

/// Invalid user configuration (bad parameters, malformed files, CFL violations).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed numerical input: NaN/inf densities, mismatched histories.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An internal invariant failed; indicates a bug or a quadrature mismatch.
class InvariantError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when a fixed time step exceeds the transport CFL limit.
class CflViolation : public ConfigError {
 public:
  CflViolation(double dt, double required)
      : ConfigError("time step " + std::to_string(dt) + " violates CFL; require dt <= " +
                    std::to_string(required)),
        dt_(dt),
        required_(required) {}
  double dt() const { return dt_; }
  double required_dt() const { return required_; }

 private:
  double dt_;
  double required_;
};

/// x log x with the 0 log 0 = 0 convention.
inline double xlogx(double x) { return x > 0.0 ? x * std::log(x) : 0.0; }

/// h(z) = z log z - z + 1 (relative-entropy integrand).
inline double h_entropy(double z) { return xlogx(z) - z + 1.0; }

}  // namespace boltzslab
