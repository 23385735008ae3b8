#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "wandteleop/geometry.hpp"
#include "wandteleop/json_io.hpp"
#include "wandteleop/mappings.hpp"

namespace wandteleop {

enum class TargetKind { Central, Outer };

std::string_view to_string(TargetKind kind);

struct Tolerances {
  double translation = 0.02;                // m
  double rotation = 0.17453292519943295;    // rad (10 deg)
  double dwell = 1.0;                       // s
};

struct TargetSpec {
  int index = 0;
  TargetKind kind = TargetKind::Central;
  Pose hand_endpoint;    // hand pose that attains the target under the mapping
  Pose effector_target;  // T_{W -> target}
  double tol_translation = 0.02;
  double tol_rotation = 0.17453292519943295;
  double dwell = 1.0;
};

struct TargetProtocol {
  int outer_count = 15;                        // 2x this many targets in total
  double hand_translation = 0.15;              // m
  double max_rotation = 0.7853981633974483;    // rad (45 deg)
  Tolerances tolerances;
};

// Outer targets sit at even indices, central returns at odd indices. Outer
// hand endpoints move the hand `hand_translation` along the i-th Fibonacci
// direction and rotate it (world frame) by U[0, max_rotation] about a
// Gaussian-normalized random axis. Effector targets are the mapping image of
// the hand endpoints, so both modes share hand endpoints for a given seed.
std::vector<TargetSpec> generate_targets(std::uint64_t seed, const MappingState& mapping,
                                         const Pose& hand_start,
                                         const TargetProtocol& protocol = {});

bool within_tolerance(const Pose& robot, const TargetSpec& target);

struct DwellTracker {
  std::optional<double> inside_since;
  std::optional<double> last_time;
  bool inside = false;
  bool achieved = false;
};

// Inclusive tolerance bands; `now` must not go backwards.
DwellTracker update_dwell(const DwellTracker& tracker, const Pose& robot, const TargetSpec& target,
                          double now);

enum class TargetColor { Red, Green, Hidden };

std::string_view to_string(TargetColor color);
TargetColor target_color(const DwellTracker& tracker);

json target_to_json(const TargetSpec& t);
TargetSpec target_from_json(const json& j);
json targets_to_json(const std::vector<TargetSpec>& targets);
std::vector<TargetSpec> targets_from_json(const json& j);

}  // namespace wandteleop
