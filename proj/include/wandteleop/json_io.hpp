#pragma once

// Wire/log representation of geometry values:
//   pose -> {"p": [x, y, z], "q": [w, x, y, z]}

#include <json.hpp>

#include "wandteleop/geometry.hpp"

namespace wandteleop {

using json = nlohmann::json;

inline json vec3_to_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

inline Vec3 vec3_from_json(const json& j) {
  if (!j.is_array() || j.size() != 3) {
    throw std::invalid_argument("expected a 3-element array");
  }
  return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()};
}

inline json pose_to_json(const Pose& p) {
  const auto q = p.quaternion();
  return json{{"p", vec3_to_json(p.translation)}, {"q", json::array({q[0], q[1], q[2], q[3]})}};
}

inline Pose pose_from_json(const json& j) {
  if (!j.is_object()) {
    throw std::invalid_argument("pose must be an object with 'p' and 'q'");
  }
  Vec3 t = Vec3::Zero();
  if (j.contains("p")) {
    t = vec3_from_json(j.at("p"));
  }
  std::array<double, 4> q{1.0, 0.0, 0.0, 0.0};
  if (j.contains("q")) {
    const auto& jq = j.at("q");
    if (!jq.is_array() || jq.size() != 4) {
      throw std::invalid_argument("quaternion must be [w, x, y, z]");
    }
    for (std::size_t i = 0; i < 4; ++i) {
      q[i] = jq.at(i).get<double>();
    }
  }
  return Pose::from_quaternion(q, t);
}

}  // namespace wandteleop
