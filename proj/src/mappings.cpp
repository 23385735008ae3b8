#include "wandteleop/mappings.hpp"

#include <cmath>
#include <stdexcept>

namespace wandteleop {

std::string_view to_string(MappingMode mode) {
  return mode == MappingMode::Direct ? "direct" : "wand";
}

MappingMode parse_mapping_mode(std::string_view name) {
  if (name == "direct" || name == "Direct") {
    return MappingMode::Direct;
  }
  if (name == "wand" || name == "Wand") {
    return MappingMode::Wand;
  }
  throw std::invalid_argument("unknown mapping mode '" + std::string(name) + "'");
}

void WandGeometry::validate() const {
  if (!(length > 0.0) || !std::isfinite(length)) {
    throw std::invalid_argument("wand length must be positive");
  }
  if (!direction.allFinite() || std::abs(direction.norm() - 1.0) > 1e-9) {
    throw std::invalid_argument("wand direction must be a unit vector");
  }
}

Pose WandGeometry::hand_to_tip() const {
  return Pose::from_translation(length * direction);
}

Pose MappingState::desired_pose(const Pose& hand_t) const {
  if (mode_ == MappingMode::Wand) {
    return compose(hand_t, hand_to_tip_);
  }
  return compose(direct_offset_, hand_t);
}

Pose MappingState::hand_for_desired(const Pose& desired) const {
  if (mode_ == MappingMode::Wand) {
    return compose(desired, invert(hand_to_tip_));
  }
  return compose(invert(direct_offset_), desired);
}

MappingState init_mapping(MappingMode mode, const Pose& hand_t0, const Pose& effector_t0,
                          bool visualization_on) {
  if (!is_rotation(hand_t0.rotation) || !is_rotation(effector_t0.rotation)) {
    throw std::invalid_argument("mapping anchors must be rigid transforms");
  }
  MappingState s;
  s.mode_ = mode;
  s.hand_t0_ = hand_t0;
  s.effector_t0_ = effector_t0;
  s.hand_to_tip_ = compose(invert(hand_t0), effector_t0);
  s.direct_offset_ = compose(effector_t0, invert(hand_t0));
  s.visualization_on_ = visualization_on;
  return s;
}

Pose desired_pose(const MappingState& state, const Pose& hand_t) {
  return state.desired_pose(hand_t);
}

MappingState set_visualization(MappingState state, bool on) {
  state.visualization_on_ = on;
  return state;
}

Pose initial_effector_pose(const Pose& hand_start, const WandGeometry& wand) {
  wand.validate();
  return compose(hand_start, wand.hand_to_tip());
}

}  // namespace wandteleop
