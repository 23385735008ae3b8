#pragma once

#include <string>
#include <string_view>

#include "wandteleop/geometry.hpp"

namespace wandteleop {

enum class MappingMode { Direct, Wand };

std::string_view to_string(MappingMode mode);
MappingMode parse_mapping_mode(std::string_view name);

// Virtual wand attached to the hand frame. The tip sits `length` along
// `direction` (hand coordinates) with the hand's orientation.
struct WandGeometry {
  double length = 0.45;
  Vec3 direction = Vec3::UnitX();

  void validate() const;
  Pose hand_to_tip() const;
};

// Frozen anchors of one mapping instance. Only the visualization flag may
// change after initialization, and it never affects desired_pose().
class MappingState {
 public:
  MappingMode mode() const { return mode_; }
  const Pose& hand_t0() const { return hand_t0_; }
  const Pose& effector_t0() const { return effector_t0_; }
  // Constant T_{E_H -> E_R*}. Meaningful in both modes, used only by Wand.
  const Pose& hand_to_tip() const { return hand_to_tip_; }
  bool visualization_on() const { return visualization_on_; }

  // Wand length observed at t0 (hand origin to tip origin).
  double wand_length() const { return hand_to_tip_.translation.norm(); }
  // Hand and effector coincide at t0; the wand has no lever arm.
  bool zero_length_wand() const { return mode_ == MappingMode::Wand && wand_length() == 0.0; }

  Pose desired_pose(const Pose& hand_t) const;
  // Inverse of desired_pose: the hand pose that commands `desired`.
  Pose hand_for_desired(const Pose& desired) const;

  bool operator==(const MappingState& other) const = default;

 private:
  friend MappingState init_mapping(MappingMode, const Pose&, const Pose&, bool);
  friend MappingState set_visualization(MappingState, bool);

  MappingMode mode_ = MappingMode::Direct;
  Pose hand_t0_;
  Pose effector_t0_;
  Pose hand_to_tip_;
  // effector_t0 * hand_t0^-1, the constant left factor of the direct law.
  Pose direct_offset_;
  bool visualization_on_ = true;
};

MappingState init_mapping(MappingMode mode, const Pose& hand_t0, const Pose& effector_t0,
                          bool visualization_on = true);

// Direct: T_{W->E_R*(t)} = T_{W->E_R*(t0)} T_{E_H(t0)->E_H(t)}.
// Wand:   T_{W->E_R*(t)} = T_{W->E_H(t)} T_{E_H->E_R*}.
Pose desired_pose(const MappingState& state, const Pose& hand_t);

MappingState set_visualization(MappingState state, bool on);

// Effector anchor for a trial starting with the hand at `hand_start`: the
// wand tip pose, which also fixes the direct-mode initial offset.
Pose initial_effector_pose(const Pose& hand_start, const WandGeometry& wand);

}  // namespace wandteleop
