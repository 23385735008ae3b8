#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "wandteleop/geometry.hpp"
#include "wandteleop/json_io.hpp"

namespace wandteleop {

struct Joint {
  std::string name;
  Vec3 axis = Vec3::UnitZ();  // revolute axis in the joint's own frame
  Pose link;                  // fixed transform from the previous frame to this joint
  double lower = -3.14159265358979;
  double upper = 3.14159265358979;
  double max_velocity = 1.0;  // rad/s
};

// Serial revolute chain: T = base * prod_i(link_i * Rot(axis_i, q_i)) * tool.
struct KinematicChain {
  Pose base;  // T_{W -> B_R}
  std::vector<Joint> joints;
  Pose tool;

  std::size_t size() const { return joints.size(); }
  void validate() const;
  bool within_limits(std::span<const double> q, double slack = 1e-12) const;
  // FNV-1a over the canonical JSON description, as 16 hex digits.
  std::string checksum() const;
};

// Seven revolute joints, alternating roll/pitch, 0.9 m reach from the
// shoulder. All-zero configuration is the arm pointing straight up.
KinematicChain default_chain();
// Planar two-link arm in the xy plane, joints about z.
KinematicChain planar_2r(double l1 = 1.0, double l2 = 1.0);

json chain_to_json(const KinematicChain& chain);
KinematicChain chain_from_json(const json& j);
KinematicChain load_chain(const std::string& path);

Pose forward_kinematics(const KinematicChain& chain, std::span<const double> q);
// Geometric Jacobian in the world frame, rows (linear, angular).
Eigen::Matrix<double, 6, Eigen::Dynamic> jacobian(const KinematicChain& chain,
                                                   std::span<const double> q);

enum class ServoMode { PoseServo, JointSpace };

std::string_view to_string(ServoMode mode);
ServoMode parse_servo_mode(std::string_view name);

struct ServoConfig {
  double gain = 0.5;      // k, 1/s
  double dt = 0.01;       // s
  double damping = 0.05;  // lambda of the damped least squares solve
  ServoMode mode = ServoMode::PoseServo;

  void validate() const;
};

enum class ServoStatus : std::uint8_t {
  Ok,
  LimitSaturated,  // a velocity or position limit clipped the step
  Stalled,         // far from desired but the step made almost no progress
};

struct RobotState {
  Eigen::VectorXd q;  // empty in PoseServo mode
  Pose pose;          // T_{W -> E_R}
  double t = 0.0;
  ServoStatus status = ServoStatus::Ok;
};

RobotState make_pose_robot(const Pose& pose, double t = 0.0);
RobotState make_joint_robot(const KinematicChain& chain, const Eigen::VectorXd& q, double t = 0.0);

// One control period of the resolved-rate servo.
//
// PoseServo integrates the closed loop e' = -k e exactly over dt: the pose
// moves the fraction 1 - exp(-k dt) of the way along the error twist
// (straight line in translation, geodesic in rotation).
//
// JointSpace resolves k * e through q' = J^T (J J^T + lambda^2 I)^-1 (k e),
// scales q' uniformly under the velocity limits and clamps q to its range.
RobotState servo_step(const KinematicChain& chain, const RobotState& state, const Pose& desired,
                      const ServoConfig& cfg);

struct IkResult {
  Eigen::VectorXd q;
  double translation_error = 0.0;
  double rotation_error = 0.0;
  bool converged = false;
};

// Iterated damped least squares from `seed`; used to place the joint-space
// robot on its starting pose.
IkResult solve_ik(const KinematicChain& chain, const Pose& target, const Eigen::VectorXd& seed,
                  int max_iterations = 2000, double tol_translation = 1e-9,
                  double tol_rotation = 1e-9);

}  // namespace wandteleop
