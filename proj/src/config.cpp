#include "wandteleop/config.hpp"

#include <algorithm>
#include <fstream>
#include <numbers>
#include <stdexcept>

#include "wandteleop/operator.hpp"

namespace wandteleop {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

}  // namespace

void ExperimentConfig::validate() const {
  if (mode_order.empty()) {
    throw std::invalid_argument("mode_order must list at least one mapping mode");
  }
  if (trials_per_mode < 1) {
    throw std::invalid_argument("trials_per_mode must be >= 1");
  }
  for (int t : visualization_off_trials) {
    if (t < 1 || t > trials_per_mode) {
      throw std::invalid_argument("visualization_off_trials entry " + std::to_string(t) +
                                  " outside 1.." + std::to_string(trials_per_mode));
    }
  }
  wand.validate();
  if (!(initial_distance > 0.0)) {
    throw std::invalid_argument("initial_distance must be positive");
  }
  if (!is_rotation(hand_start.rotation)) {
    throw std::invalid_argument("hand_start is not a rigid transform");
  }
  servo.validate();
  if (protocol.outer_count < 1 || !(protocol.hand_translation > 0.0) ||
      !(protocol.max_rotation >= 0.0)) {
    throw std::invalid_argument("invalid target protocol");
  }
  const auto& tol = protocol.tolerances;
  if (!(tol.translation > 0.0) || !(tol.rotation > 0.0) || !(tol.dwell >= 0.0)) {
    throw std::invalid_argument("invalid tolerances");
  }
  ReachPlan probe;
  probe.duration = operator_model.duration;
  probe.ballistic_fraction = operator_model.ballistic_fraction;
  probe.ballistic_amplitude = operator_model.ballistic_amplitude;
  probe.noise_scale = operator_model.noise_scale;
  probe.validate();
}

bool ExperimentConfig::visualization_on(int trial) const {
  return std::find(visualization_off_trials.begin(), visualization_off_trials.end(), trial) ==
         visualization_off_trials.end();
}

KinematicChain ExperimentConfig::chain() const {
  KinematicChain c = chain_file.empty() ? default_chain() : load_chain(chain_file);
  if (frames.contains(FrameRegistry::kRobotBase)) {
    c.base = frames.at(FrameRegistry::kRobotBase);
  }
  return c;
}

Pose ExperimentConfig::effector_start(MappingMode mode) const {
  if (mode == MappingMode::Wand) {
    return initial_effector_pose(hand_start, wand);
  }
  return compose(hand_start, Pose::from_translation(initial_distance * wand.direction));
}

MappingState ExperimentConfig::mapping_for(MappingMode mode, int trial) const {
  return init_mapping(mode, hand_start, effector_start(mode), visualization_on(trial));
}

json config_to_json(const ExperimentConfig& cfg) {
  json modes = json::array();
  for (auto m : cfg.mode_order) {
    modes.push_back(to_string(m));
  }
  json frames = json::object();
  for (const auto& name : cfg.frames.names()) {
    if (name != FrameRegistry::kWorld) {
      frames[name] = pose_to_json(cfg.frames.at(name));
    }
  }
  const auto& p = cfg.protocol;
  return json{
      {"mode_order", modes},
      {"trials_per_mode", cfg.trials_per_mode},
      {"visualization_off_trials", cfg.visualization_off_trials},
      {"wand", {{"length", cfg.wand.length}, {"direction", vec3_to_json(cfg.wand.direction)}}},
      {"initial_distance", cfg.initial_distance},
      {"hand_start", pose_to_json(cfg.hand_start)},
      {"seed", cfg.seed},
      {"servo",
       {{"gain", cfg.servo.gain},
        {"dt", cfg.servo.dt},
        {"damping", cfg.servo.damping},
        {"mode", to_string(cfg.servo.mode)}}},
      {"chain_file", cfg.chain_file},
      {"protocol",
       {{"outer_count", p.outer_count},
        {"hand_translation", p.hand_translation},
        {"max_rotation_deg", p.max_rotation / kDeg},
        {"tol_translation", p.tolerances.translation},
        {"tol_rotation_deg", p.tolerances.rotation / kDeg},
        {"dwell", p.tolerances.dwell}}},
      {"operator",
       {{"duration", cfg.operator_model.duration},
        {"ballistic_fraction", cfg.operator_model.ballistic_fraction},
        {"ballistic_amplitude", cfg.operator_model.ballistic_amplitude},
        {"noise_scale", cfg.operator_model.noise_scale}}},
      {"target_timeout", cfg.target_timeout},
      {"frames", frames},
  };
}

ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig c;
  if (j.contains("mode_order")) {
    c.mode_order.clear();
    for (const auto& m : j.at("mode_order")) {
      c.mode_order.push_back(parse_mapping_mode(m.get<std::string>()));
    }
  }
  c.trials_per_mode = j.value("trials_per_mode", c.trials_per_mode);
  if (j.contains("visualization_off_trials")) {
    c.visualization_off_trials = j.at("visualization_off_trials").get<std::vector<int>>();
  }
  if (j.contains("wand")) {
    const auto& w = j.at("wand");
    c.wand.length = w.value("length", c.wand.length);
    if (w.contains("direction")) {
      c.wand.direction = vec3_from_json(w.at("direction"));
    }
  }
  c.initial_distance = j.value("initial_distance", c.initial_distance);
  if (j.contains("hand_start")) {
    c.hand_start = pose_from_json(j.at("hand_start"));
  }
  c.seed = j.value("seed", c.seed);
  if (j.contains("servo")) {
    const auto& s = j.at("servo");
    c.servo.gain = s.value("gain", c.servo.gain);
    c.servo.dt = s.value("dt", c.servo.dt);
    c.servo.damping = s.value("damping", c.servo.damping);
    if (s.contains("mode")) {
      c.servo.mode = parse_servo_mode(s.at("mode").get<std::string>());
    }
  }
  c.chain_file = j.value("chain_file", c.chain_file);
  if (j.contains("protocol")) {
    const auto& p = j.at("protocol");
    auto& out = c.protocol;
    out.outer_count = p.value("outer_count", out.outer_count);
    out.hand_translation = p.value("hand_translation", out.hand_translation);
    out.max_rotation = p.value("max_rotation_deg", out.max_rotation / kDeg) * kDeg;
    out.tolerances.translation = p.value("tol_translation", out.tolerances.translation);
    out.tolerances.rotation = p.value("tol_rotation_deg", out.tolerances.rotation / kDeg) * kDeg;
    out.tolerances.dwell = p.value("dwell", out.tolerances.dwell);
  }
  if (j.contains("operator")) {
    const auto& o = j.at("operator");
    auto& out = c.operator_model;
    out.duration = o.value("duration", out.duration);
    out.ballistic_fraction = o.value("ballistic_fraction", out.ballistic_fraction);
    out.ballistic_amplitude = o.value("ballistic_amplitude", out.ballistic_amplitude);
    out.noise_scale = o.value("noise_scale", out.noise_scale);
  }
  c.target_timeout = j.value("target_timeout", c.target_timeout);
  if (j.contains("frames")) {
    for (const auto& [name, pose] : j.at("frames").items()) {
      c.frames.set(name, pose_from_json(pose));
    }
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open config file '" + path + "'");
  }
  return config_from_json(json::parse(in));
}

}  // namespace wandteleop
