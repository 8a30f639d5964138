#pragma once

#include "axisline/geometry.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <random>

namespace axisline {

/// Deterministic random source. Distributions are implemented here (not via
/// <random> distribution objects) so that a seed produces bit-identical
/// streams across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double mag = std::sqrt(-2.0 * std::log(u1));
    spare_ = mag * std::sin(2.0 * M_PI * u2);
    has_spare_ = true;
    return mag * std::cos(2.0 * M_PI * u2);
  }

  double normal(double sigma) { return sigma * normal(); }

  Eigen::Vector2d gaussian2(double sigma) { return {normal(sigma), normal(sigma)}; }
  Eigen::Vector3d gaussian3(double sigma) { return {normal(sigma), normal(sigma), normal(sigma)}; }

  /// Uniform direction on the unit sphere.
  Eigen::Vector3d unit_vector() {
    const double z = uniform(-1.0, 1.0);
    const double t = uniform(0.0, 2.0 * M_PI);
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    return {r * std::cos(t), r * std::sin(t), z};
  }

  /// Rotates v by a tangent-plane Gaussian step of the given angular sigma
  /// (radians); sigma 0 returns v unchanged but still consumes draws, keeping
  /// the stream layout independent of the noise level.
  Eigen::Vector3d perturb_direction(const Eigen::Vector3d& v, double sigma_rad) {
    const Eigen::Vector2d step = gaussian2(1.0) * sigma_rad;
    if (sigma_rad == 0.0) return v;
    return sphere_retract(v.normalized(), step.x(), step.y());
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace axisline
