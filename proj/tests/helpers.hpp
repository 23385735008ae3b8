#pragma once

#include <cmath>
#include <random>

#include "wandteleop/geometry.hpp"

namespace testutil {

inline wandteleop::Vec3 random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  wandteleop::Vec3 v(n(rng), n(rng), n(rng));
  return v.normalized();
}

// Uniform-ish random pose: translation in a cube of half-width `extent`,
// rotation angle uniform in [0, max_angle].
inline wandteleop::Pose random_pose(std::mt19937_64& rng, double extent = 1.0,
                                    double max_angle = 3.14159265358979) {
  std::uniform_real_distribution<double> u(-extent, extent);
  std::uniform_real_distribution<double> a(0.0, max_angle);
  return wandteleop::Pose::from_axis_angle(random_unit(rng), a(rng),
                                           wandteleop::Vec3(u(rng), u(rng), u(rng)));
}

inline double max_abs_diff(const wandteleop::Pose& a, const wandteleop::Pose& b) {
  return std::max((a.rotation - b.rotation).cwiseAbs().maxCoeff(),
                  (a.translation - b.translation).cwiseAbs().maxCoeff());
}

}  // namespace testutil
