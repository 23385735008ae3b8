#include "wandteleop/task.hpp"

#include <random>
#include <stdexcept>

namespace wandteleop {

namespace {

// Float slack on the dwell comparison: tick times are n * dt.
constexpr double kDwellSlack = 1e-9;

}  // namespace

std::string_view to_string(TargetKind kind) {
  return kind == TargetKind::Central ? "central" : "outer";
}

std::string_view to_string(TargetColor color) {
  switch (color) {
    case TargetColor::Red:
      return "red";
    case TargetColor::Green:
      return "green";
    case TargetColor::Hidden:
      return "hidden";
  }
  return "red";
}

std::vector<TargetSpec> generate_targets(std::uint64_t seed, const MappingState& mapping,
                                         const Pose& hand_start, const TargetProtocol& protocol) {
  if (protocol.outer_count < 1) {
    throw std::invalid_argument("protocol needs at least one outer target");
  }
  const auto directions = fibonacci_sphere(static_cast<std::size_t>(protocol.outer_count));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gaussian(0.0, 1.0);
  std::uniform_real_distribution<double> angle_dist(0.0, protocol.max_rotation);

  std::vector<TargetSpec> targets;
  targets.reserve(2 * directions.size());
  for (std::size_t i = 0; i < directions.size(); ++i) {
    Vec3 axis;
    do {
      axis = Vec3(gaussian(rng), gaussian(rng), gaussian(rng));
    } while (axis.norm() < 1e-12);
    axis.normalize();
    const double angle = angle_dist(rng);

    Pose outer;
    outer.rotation = Eigen::AngleAxisd(angle, axis).toRotationMatrix() * hand_start.rotation;
    outer.translation = hand_start.translation + protocol.hand_translation * directions[i];

    for (const auto& [kind, hand] : {std::pair{TargetKind::Outer, outer},
                                     std::pair{TargetKind::Central, hand_start}}) {
      TargetSpec t;
      t.index = static_cast<int>(targets.size());
      t.kind = kind;
      t.hand_endpoint = hand;
      t.effector_target = mapping.desired_pose(hand);
      t.tol_translation = protocol.tolerances.translation;
      t.tol_rotation = protocol.tolerances.rotation;
      t.dwell = protocol.tolerances.dwell;
      targets.push_back(t);
    }
  }
  return targets;
}

bool within_tolerance(const Pose& robot, const TargetSpec& target) {
  return translation_distance(robot, target.effector_target) <= target.tol_translation &&
         rotation_distance(robot.rotation, target.effector_target.rotation) <= target.tol_rotation;
}

DwellTracker update_dwell(const DwellTracker& tracker, const Pose& robot, const TargetSpec& target,
                          double now) {
  if (tracker.last_time && now < *tracker.last_time) {
    throw std::invalid_argument("dwell update with time going backwards");
  }
  DwellTracker next = tracker;
  next.last_time = now;
  if (tracker.achieved) {
    return next;
  }
  next.inside = within_tolerance(robot, target);
  if (!next.inside) {
    next.inside_since.reset();
    return next;
  }
  if (!next.inside_since) {
    next.inside_since = now;
  }
  if (now - *next.inside_since >= target.dwell - kDwellSlack) {
    next.achieved = true;
  }
  return next;
}

TargetColor target_color(const DwellTracker& tracker) {
  if (tracker.achieved) {
    return TargetColor::Hidden;
  }
  return tracker.inside ? TargetColor::Green : TargetColor::Red;
}

json target_to_json(const TargetSpec& t) {
  return json{{"index", t.index},
              {"kind", to_string(t.kind)},
              {"hand_endpoint", pose_to_json(t.hand_endpoint)},
              {"effector_target", pose_to_json(t.effector_target)},
              {"tol_translation", t.tol_translation},
              {"tol_rotation", t.tol_rotation},
              {"dwell", t.dwell}};
}

TargetSpec target_from_json(const json& j) {
  TargetSpec t;
  t.index = j.at("index").get<int>();
  const auto kind = j.at("kind").get<std::string>();
  if (kind != "central" && kind != "outer") {
    throw std::invalid_argument("unknown target kind '" + kind + "'");
  }
  t.kind = kind == "central" ? TargetKind::Central : TargetKind::Outer;
  t.hand_endpoint = pose_from_json(j.at("hand_endpoint"));
  t.effector_target = pose_from_json(j.at("effector_target"));
  t.tol_translation = j.at("tol_translation").get<double>();
  t.tol_rotation = j.at("tol_rotation").get<double>();
  t.dwell = j.at("dwell").get<double>();
  return t;
}

json targets_to_json(const std::vector<TargetSpec>& targets) {
  json out = json::array();
  for (const auto& t : targets) {
    out.push_back(target_to_json(t));
  }
  return out;
}

std::vector<TargetSpec> targets_from_json(const json& j) {
  std::vector<TargetSpec> out;
  for (const auto& jt : j) {
    out.push_back(target_from_json(jt));
  }
  return out;
}

}  // namespace wandteleop
