#include "wandteleop/operator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace wandteleop {

void ReachPlan::validate() const {
  if (!(duration > 0.0)) {
    throw std::invalid_argument("reach duration must be positive");
  }
  if (!(ballistic_fraction > 0.0 && ballistic_fraction < 1.0)) {
    throw std::invalid_argument("ballistic_fraction must lie in (0, 1)");
  }
  if (!(ballistic_amplitude >= 0.0 && ballistic_amplitude <= 1.0)) {
    throw std::invalid_argument("ballistic_amplitude must lie in [0, 1]");
  }
  if (!(noise_scale >= 0.0)) {
    throw std::invalid_argument("noise_scale must be non-negative");
  }
}

double minimum_jerk(double s) {
  s = std::clamp(s, 0.0, 1.0);
  const double s3 = s * s * s;
  return s3 * (10.0 - 15.0 * s + 6.0 * s * s);
}

double minimum_jerk_rate(double s) {
  s = std::clamp(s, 0.0, 1.0);
  return 30.0 * s * s * (1.0 - s) * (1.0 - s);
}

double reach_progress(const ReachPlan& plan, double t) {
  const double split = plan.ballistic_fraction * plan.duration;
  if (t >= plan.duration) {
    return 1.0;
  }
  if (t < split) {
    return plan.ballistic_amplitude * minimum_jerk(t / split);
  }
  const double u = (t - split) / (plan.duration - split);
  return plan.ballistic_amplitude + (1.0 - plan.ballistic_amplitude) * minimum_jerk(u);
}

Pose hand_pose_at(const ReachPlan& plan, double t) {
  t = std::clamp(t, 0.0, plan.duration);
  if (t >= plan.duration) {
    return plan.to;
  }
  if (t <= 0.0) {
    return plan.from;
  }
  const Vec3 dx = plan.to.translation - plan.from.translation;
  const Vec3 dr = log_vector(plan.to.rotation * plan.from.rotation.transpose());
  const double p = reach_progress(plan, t);

  Vec3 translation = plan.from.translation + p * dx;
  Vec3 rotation = p * dr;

  const double split = plan.ballistic_fraction * plan.duration;
  if (plan.noise_scale > 0.0 && t > split) {
    std::mt19937_64 rng(plan.noise_seed);
    std::normal_distribution<double> g(0.0, 1.0);
    const Vec3 nt(g(rng), g(rng), g(rng));
    const Vec3 nr(g(rng), g(rng), g(rng));
    const double bump = std::sin(std::numbers::pi * (t - split) / (plan.duration - split));
    translation += plan.noise_scale * dx.norm() * bump * nt;
    rotation += plan.noise_scale * dr.norm() * bump * nr;
  }

  Pose out;
  out.translation = translation;
  out.rotation = exp_rotation(rotation) * plan.from.rotation;
  return out;
}

json plan_to_json(const ReachPlan& plan) {
  return json{{"from", pose_to_json(plan.from)},
              {"to", pose_to_json(plan.to)},
              {"duration", plan.duration},
              {"ballistic_fraction", plan.ballistic_fraction},
              {"ballistic_amplitude", plan.ballistic_amplitude},
              {"noise_scale", plan.noise_scale},
              {"noise_seed", plan.noise_seed}};
}

ReachPlan plan_from_json(const json& j) {
  ReachPlan p;
  p.from = pose_from_json(j.at("from"));
  p.to = pose_from_json(j.at("to"));
  p.duration = j.value("duration", p.duration);
  p.ballistic_fraction = j.value("ballistic_fraction", p.ballistic_fraction);
  p.ballistic_amplitude = j.value("ballistic_amplitude", p.ballistic_amplitude);
  p.noise_scale = j.value("noise_scale", p.noise_scale);
  p.noise_seed = j.value("noise_seed", p.noise_seed);
  p.validate();
  return p;
}

}  // namespace wandteleop
