#pragma once

#include <cstdint>

#include "wandteleop/geometry.hpp"
#include "wandteleop/json_io.hpp"

namespace wandteleop {

// Two-phase reach: a ballistic minimum-jerk sub-movement covering
// `ballistic_amplitude` of the displacement in `ballistic_fraction` of the
// time, then a minimum-jerk correction for the rest. Translation and
// rotation (geodesic) share one scalar progress profile.
struct ReachPlan {
  Pose from;
  Pose to;
  double duration = 2.0;
  double ballistic_fraction = 0.5;
  double ballistic_amplitude = 0.9;
  double noise_scale = 0.0;
  std::uint64_t noise_seed = 0;

  void validate() const;
};

// 10 s^3 - 15 s^4 + 6 s^5, s clamped to [0, 1].
double minimum_jerk(double s);
// d/ds of minimum_jerk.
double minimum_jerk_rate(double s);

// Scalar progress in [0, 1] of the noise-free plan at time t.
double reach_progress(const ReachPlan& plan, double t);

// Noise (if any) is a smooth bump confined to the adjust phase, so the end
// pose stays exactly `to`. t is clamped to [0, duration].
Pose hand_pose_at(const ReachPlan& plan, double t);

json plan_to_json(const ReachPlan& plan);
ReachPlan plan_from_json(const json& j);

}  // namespace wandteleop
