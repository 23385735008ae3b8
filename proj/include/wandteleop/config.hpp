#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "wandteleop/geometry.hpp"
#include "wandteleop/json_io.hpp"
#include "wandteleop/mappings.hpp"
#include "wandteleop/robot.hpp"
#include "wandteleop/task.hpp"

namespace wandteleop {

struct OperatorConfig {
  double duration = 2.0;
  double ballistic_fraction = 0.5;
  double ballistic_amplitude = 0.9;
  double noise_scale = 0.0;
};

// One configuration file drives headless runs, live serving and replay.
struct ExperimentConfig {
  std::vector<MappingMode> mode_order{MappingMode::Direct, MappingMode::Wand};
  int trials_per_mode = 7;
  std::vector<int> visualization_off_trials{4, 6};  // 1-based
  WandGeometry wand;                  // wand attached in Wand mode
  double initial_distance = 0.45;     // hand to desired effector at t0, Direct mode
  Pose hand_start = Pose::from_translation({0.0, 0.0, 0.40});
  std::uint64_t seed = 1;
  ServoConfig servo;
  std::string chain_file;             // empty: built-in 7-DoF chain
  TargetProtocol protocol;
  OperatorConfig operator_model;
  double target_timeout = 60.0;       // s per target, headless only; <= 0 disables
  FrameRegistry frames;               // W -> B_R, O, W_AR

  void validate() const;
  bool visualization_on(int trial) const;
  KinematicChain chain() const;
  // Effector pose at the start of every trial of `mode`.
  Pose effector_start(MappingMode mode) const;
  MappingState mapping_for(MappingMode mode, int trial) const;
};

json config_to_json(const ExperimentConfig& cfg);
ExperimentConfig config_from_json(const json& j);
ExperimentConfig load_config(const std::string& path);

}  // namespace wandteleop
