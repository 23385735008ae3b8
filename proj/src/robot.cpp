#include "wandteleop/robot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <stdexcept>

namespace wandteleop {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

Joint make_joint(std::string name, const Vec3& axis, const Vec3& offset, double limit,
                 double max_velocity) {
  Joint j;
  j.name = std::move(name);
  j.axis = axis;
  j.link = Pose::from_translation(offset);
  j.lower = -limit;
  j.upper = limit;
  j.max_velocity = max_velocity;
  return j;
}

void check_size(const KinematicChain& chain, std::span<const double> q) {
  if (q.size() != chain.size()) {
    throw std::invalid_argument("joint vector has " + std::to_string(q.size()) +
                                " entries, chain has " + std::to_string(chain.size()));
  }
}

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

Eigen::VectorXd dls_solve(const Eigen::Matrix<double, 6, Eigen::Dynamic>& J, const Vec6& v,
                          double damping) {
  const Eigen::Matrix<double, 6, 6> JJt =
      J * J.transpose() + damping * damping * Eigen::Matrix<double, 6, 6>::Identity();
  return J.transpose() * JJt.ldlt().solve(v);
}

}  // namespace

void KinematicChain::validate() const {
  if (joints.empty()) {
    throw std::invalid_argument("kinematic chain needs at least one joint");
  }
  if (!is_rotation(base.rotation) || !is_rotation(tool.rotation)) {
    throw std::invalid_argument("chain base/tool must be rigid transforms");
  }
  for (const auto& j : joints) {
    if (!j.axis.allFinite() || std::abs(j.axis.norm() - 1.0) > 1e-9) {
      throw std::invalid_argument("joint '" + j.name + "' axis is not a unit vector");
    }
    if (!(j.lower < j.upper)) {
      throw std::invalid_argument("joint '" + j.name + "' limits are not ordered");
    }
    if (!(j.max_velocity > 0.0)) {
      throw std::invalid_argument("joint '" + j.name + "' velocity limit must be positive");
    }
    if (!is_rotation(j.link.rotation)) {
      throw std::invalid_argument("joint '" + j.name + "' link is not a rigid transform");
    }
  }
}

bool KinematicChain::within_limits(std::span<const double> q, double slack) const {
  if (q.size() != joints.size()) {
    return false;
  }
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (!std::isfinite(q[i]) || q[i] < joints[i].lower - slack || q[i] > joints[i].upper + slack) {
      return false;
    }
  }
  return true;
}

std::string KinematicChain::checksum() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a(chain_to_json(*this).dump())));
  return buf;
}

KinematicChain default_chain() {
  KinematicChain c;
  c.joints = {
      make_joint("shoulder_roll", Vec3::UnitZ(), {0.0, 0.0, 0.1564}, kTwoPi, 1.39),
      make_joint("shoulder_pitch", Vec3::UnitY(), {0.0, 0.0, 0.1284}, 2.24, 1.39),
      make_joint("upper_arm_roll", Vec3::UnitZ(), {0.0, 0.0, 0.2104}, kTwoPi, 1.39),
      make_joint("elbow", Vec3::UnitY(), {0.0, 0.0, 0.2104}, 2.57, 1.39),
      make_joint("forearm_roll", Vec3::UnitZ(), {0.0, 0.0, 0.2084}, kTwoPi, 1.22),
      make_joint("wrist_pitch", Vec3::UnitY(), {0.0, 0.0, 0.1059}, 2.09, 1.22),
      make_joint("wrist_roll", Vec3::UnitZ(), {0.0, 0.0, 0.1059}, kTwoPi, 1.22),
  };
  c.tool = Pose::from_translation({0.0, 0.0, 0.0615});
  return c;
}

KinematicChain planar_2r(double l1, double l2) {
  KinematicChain c;
  c.joints = {
      make_joint("j1", Vec3::UnitZ(), Vec3::Zero(), kTwoPi, 10.0),
      make_joint("j2", Vec3::UnitZ(), {l1, 0.0, 0.0}, kTwoPi, 10.0),
  };
  c.tool = Pose::from_translation({l2, 0.0, 0.0});
  return c;
}

json chain_to_json(const KinematicChain& chain) {
  json joints = json::array();
  for (const auto& j : chain.joints) {
    joints.push_back({{"name", j.name},
                      {"axis", vec3_to_json(j.axis)},
                      {"link", pose_to_json(j.link)},
                      {"limits", json::array({j.lower, j.upper})},
                      {"max_velocity", j.max_velocity}});
  }
  return json{{"base", pose_to_json(chain.base)},
              {"joints", std::move(joints)},
              {"tool", pose_to_json(chain.tool)}};
}

KinematicChain chain_from_json(const json& j) {
  KinematicChain c;
  if (j.contains("base")) {
    c.base = pose_from_json(j.at("base"));
  }
  if (j.contains("tool")) {
    c.tool = pose_from_json(j.at("tool"));
  }
  for (const auto& jj : j.at("joints")) {
    Joint joint;
    joint.name = jj.value("name", "joint" + std::to_string(c.joints.size() + 1));
    joint.axis = vec3_from_json(jj.at("axis"));
    if (jj.contains("link")) {
      joint.link = pose_from_json(jj.at("link"));
    }
    const auto& lim = jj.at("limits");
    joint.lower = lim.at(0).get<double>();
    joint.upper = lim.at(1).get<double>();
    joint.max_velocity = jj.at("max_velocity").get<double>();
    c.joints.push_back(std::move(joint));
  }
  c.validate();
  return c;
}

KinematicChain load_chain(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open chain file '" + path + "'");
  }
  return chain_from_json(json::parse(in));
}

Pose forward_kinematics(const KinematicChain& chain, std::span<const double> q) {
  check_size(chain, q);
  if (!chain.within_limits(q)) {
    throw std::out_of_range("joint configuration outside chain limits");
  }
  Pose T = chain.base;
  for (std::size_t i = 0; i < q.size(); ++i) {
    const Joint& j = chain.joints[i];
    T = compose(T, j.link);
    T.rotation = T.rotation * Eigen::AngleAxisd(q[i], j.axis).toRotationMatrix();
  }
  return compose(T, chain.tool);
}

Eigen::Matrix<double, 6, Eigen::Dynamic> jacobian(const KinematicChain& chain,
                                                   std::span<const double> q) {
  check_size(chain, q);
  const std::size_t n = chain.size();
  std::vector<Vec3> axes(n);
  std::vector<Vec3> origins(n);
  Pose T = chain.base;
  for (std::size_t i = 0; i < n; ++i) {
    const Joint& j = chain.joints[i];
    T = compose(T, j.link);
    axes[i] = T.rotation * j.axis;
    origins[i] = T.translation;
    T.rotation = T.rotation * Eigen::AngleAxisd(q[i], j.axis).toRotationMatrix();
  }
  const Vec3 p_eff = compose(T, chain.tool).translation;
  Eigen::Matrix<double, 6, Eigen::Dynamic> J(6, static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    J.col(static_cast<Eigen::Index>(i)) << axes[i].cross(p_eff - origins[i]), axes[i];
  }
  return J;
}

std::string_view to_string(ServoMode mode) {
  return mode == ServoMode::PoseServo ? "pose" : "joint";
}

ServoMode parse_servo_mode(std::string_view name) {
  if (name == "pose" || name == "PoseServo") {
    return ServoMode::PoseServo;
  }
  if (name == "joint" || name == "JointSpace") {
    return ServoMode::JointSpace;
  }
  throw std::invalid_argument("unknown servo mode '" + std::string(name) + "'");
}

void ServoConfig::validate() const {
  if (!(gain > 0.0) || !(dt > 0.0) || !(gain * dt < 1.0)) {
    throw std::invalid_argument("servo config requires k > 0, dt > 0 and k*dt < 1");
  }
  if (!(damping >= 0.0)) {
    throw std::invalid_argument("servo damping must be non-negative");
  }
}

RobotState make_pose_robot(const Pose& pose, double t) {
  RobotState s;
  s.pose = pose;
  s.t = t;
  return s;
}

RobotState make_joint_robot(const KinematicChain& chain, const Eigen::VectorXd& q, double t) {
  RobotState s;
  s.q = q;
  s.pose = forward_kinematics(chain, {q.data(), static_cast<std::size_t>(q.size())});
  s.t = t;
  return s;
}

RobotState servo_step(const KinematicChain& chain, const RobotState& state, const Pose& desired,
                      const ServoConfig& cfg) {
  RobotState next = state;
  next.t = state.t + cfg.dt;
  next.status = ServoStatus::Ok;
  const Twist e = pose_error(state.pose, desired);
  if (e.is_zero()) {
    return next;
  }

  if (cfg.mode == ServoMode::PoseServo) {
    const double fraction = -std::expm1(-cfg.gain * cfg.dt);
    next.pose.translation = state.pose.translation + fraction * e.linear;
    next.pose.rotation = exp_rotation(fraction * e.angular) * state.pose.rotation;
    return next;
  }

  const std::span<const double> q{state.q.data(), static_cast<std::size_t>(state.q.size())};
  const auto J = jacobian(chain, q);
  Eigen::VectorXd qdot = dls_solve(J, cfg.gain * e.stacked(), cfg.damping);

  bool clipped = false;
  double scale = 1.0;
  for (Eigen::Index i = 0; i < qdot.size(); ++i) {
    const double vmax = chain.joints[static_cast<std::size_t>(i)].max_velocity;
    if (std::abs(qdot(i)) > vmax) {
      scale = std::min(scale, vmax / std::abs(qdot(i)));
    }
  }
  if (scale < 1.0) {
    qdot *= scale;
    clipped = true;
  }
  next.q = state.q + cfg.dt * qdot;
  for (Eigen::Index i = 0; i < next.q.size(); ++i) {
    const Joint& j = chain.joints[static_cast<std::size_t>(i)];
    if (next.q(i) < j.lower || next.q(i) > j.upper) {
      next.q(i) = std::clamp(next.q(i), j.lower, j.upper);
      clipped = true;
    }
  }
  next.pose = forward_kinematics(chain, {next.q.data(), static_cast<std::size_t>(next.q.size())});

  if (clipped) {
    next.status = ServoStatus::LimitSaturated;
  } else {
    const double before = e.stacked().norm();
    const double after = pose_error(next.pose, desired).stacked().norm();
    if (before > 1e-4 && before - after < 0.1 * cfg.gain * cfg.dt * before) {
      next.status = ServoStatus::Stalled;
    }
  }
  return next;
}

IkResult solve_ik(const KinematicChain& chain, const Pose& target, const Eigen::VectorXd& seed,
                  int max_iterations, double tol_translation, double tol_rotation) {
  IkResult r;
  r.q = seed;
  for (int it = 0; it <= max_iterations; ++it) {
    const std::span<const double> q{r.q.data(), static_cast<std::size_t>(r.q.size())};
    const Twist e = pose_error(forward_kinematics(chain, q), target);
    r.translation_error = e.linear.norm();
    r.rotation_error = e.angular.norm();
    if (r.translation_error <= tol_translation && r.rotation_error <= tol_rotation) {
      r.converged = true;
      return r;
    }
    if (it == max_iterations) {
      break;
    }
    const double damping = std::min(0.05, e.stacked().norm());
    Eigen::VectorXd dq = dls_solve(jacobian(chain, q), e.stacked(), damping);
    const double max_step = 0.2;
    if (dq.cwiseAbs().maxCoeff() > max_step) {
      dq *= max_step / dq.cwiseAbs().maxCoeff();
    }
    r.q += dq;
    for (Eigen::Index i = 0; i < r.q.size(); ++i) {
      const Joint& j = chain.joints[static_cast<std::size_t>(i)];
      r.q(i) = std::clamp(r.q(i), j.lower, j.upper);
    }
  }
  return r;
}

}  // namespace wandteleop
