#pragma once

// Rigid-body math for the teleoperation workbench.
//
// Conventions: right-handed frames, column vectors, world-frame composition.
// A Pose named T_{A->B} maps coordinates expressed in frame B into frame A,
// so chaining frames reads left to right: compose(T_{A->B}, T_{B->C}) = T_{A->C}.
// Quaternions are stored [w, x, y, z] at every interface and canonicalized to w >= 0.

#include <array>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace wandteleop {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;

struct Pose {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  static Pose identity() { return {}; }
  static Pose from_translation(const Vec3& t);
  static Pose from_rotation(const Mat3& r);
  static Pose from_axis_angle(const Vec3& axis, double angle, const Vec3& t = Vec3::Zero());

  // Quaternion ingest: |q| within 1e-6 of 1 is renormalized silently, beyond
  // 1e-3 the pose is rejected with std::invalid_argument.
  static Pose from_quaternion(const std::array<double, 4>& wxyz, const Vec3& t);

  std::array<double, 4> quaternion() const;
  Eigen::Matrix4d matrix() const;

  bool operator==(const Pose& other) const {
    return rotation == other.rotation && translation == other.translation;
  }
};

// Linear part in m (or m/s), angular part as axis * angle in world frame.
struct Twist {
  Vec3 linear = Vec3::Zero();
  Vec3 angular = Vec3::Zero();

  Vec6 stacked() const;
  bool is_zero() const { return linear.isZero(0.0) && angular.isZero(0.0); }
};

struct AxisAngle {
  Vec3 axis = Vec3::UnitX();
  double angle = 0.0;  // [0, pi]
};

Pose compose(const Pose& a, const Pose& b);
Pose invert(const Pose& p);

double geodesic_angle(const Mat3& r);
// Geodesic angle of a * b^T, i.e. the rotation separating the two orientations.
double rotation_distance(const Mat3& a, const Mat3& b);
double translation_distance(const Pose& a, const Pose& b);

AxisAngle log_rotation(const Mat3& r);
Vec3 log_vector(const Mat3& r);
Mat3 exp_rotation(const Vec3& rotation_vector);
Mat3 skew(const Vec3& v);

// linear = desired.t - current.t, angular = log(desired.R * current.R^T).
Twist pose_error(const Pose& current, const Pose& desired);

// Spiral lattice of n unit vectors, z descending from the north pole.
std::vector<Vec3> fibonacci_sphere(std::size_t n);

bool is_rotation(const Mat3& r, double tol = 1e-9);

// Named world-frame transforms; "W" always resolves to identity.
class FrameRegistry {
 public:
  static constexpr const char* kWorld = "W";
  static constexpr const char* kRobotBase = "B_R";
  static constexpr const char* kTracker = "O";
  static constexpr const char* kHeadset = "W_AR";

  void set(const std::string& name, const Pose& world_to_frame);
  Pose at(const std::string& name) const;
  bool contains(const std::string& name) const;
  std::vector<std::string> names() const;

  // Re-expresses a pose measured in `frame` in world coordinates.
  Pose to_world(const std::string& frame, const Pose& in_frame) const {
    return compose(at(frame), in_frame);
  }

 private:
  std::map<std::string, Pose> frames_;
};

}  // namespace wandteleop
