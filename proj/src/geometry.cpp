#include "wandteleop/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace wandteleop {

namespace {

// Angles above this use the symmetric-part axis extraction.
constexpr double kNearPi = std::numbers::pi - 1e-4;
constexpr double kSmallAngle = 1e-10;

Vec3 vee(const Mat3& m) {
  return {m(2, 1) - m(1, 2), m(0, 2) - m(2, 0), m(1, 0) - m(0, 1)};
}

}  // namespace

Pose Pose::from_translation(const Vec3& t) {
  Pose p;
  p.translation = t;
  return p;
}

Pose Pose::from_rotation(const Mat3& r) {
  Pose p;
  p.rotation = r;
  return p;
}

Pose Pose::from_axis_angle(const Vec3& axis, double angle, const Vec3& t) {
  Pose p;
  p.rotation = Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix();
  p.translation = t;
  return p;
}

Pose Pose::from_quaternion(const std::array<double, 4>& wxyz, const Vec3& t) {
  Eigen::Quaterniond q(wxyz[0], wxyz[1], wxyz[2], wxyz[3]);
  const double norm = q.norm();
  if (!std::isfinite(norm) || std::abs(norm - 1.0) > 1e-3) {
    throw std::invalid_argument("quaternion norm out of tolerance: " + std::to_string(norm));
  }
  if (!t.allFinite()) {
    throw std::invalid_argument("translation is not finite");
  }
  q.normalize();
  Pose p;
  p.rotation = q.toRotationMatrix();
  p.translation = t;
  return p;
}

std::array<double, 4> Pose::quaternion() const {
  Eigen::Quaterniond q(rotation);
  q.normalize();
  if (q.w() < 0.0) {
    q.coeffs() *= -1.0;
  }
  return {q.w(), q.x(), q.y(), q.z()};
}

Eigen::Matrix4d Pose::matrix() const {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = rotation;
  m.topRightCorner<3, 1>() = translation;
  return m;
}

Vec6 Twist::stacked() const {
  Vec6 v;
  v << linear, angular;
  return v;
}

Pose compose(const Pose& a, const Pose& b) {
  Pose out;
  out.rotation = a.rotation * b.rotation;
  out.translation = a.rotation * b.translation + a.translation;
  return out;
}

Pose invert(const Pose& p) {
  Pose out;
  out.rotation = p.rotation.transpose();
  out.translation = -(out.rotation * p.translation);
  return out;
}

double geodesic_angle(const Mat3& r) {
  // atan2 of the skew and symmetric parts; acos(c) loses digits near 0 and pi.
  const double c = std::clamp((r.trace() - 1.0) / 2.0, -1.0, 1.0);
  const double s = 0.5 * vee(r).norm();
  return std::atan2(s, c);
}

double rotation_distance(const Mat3& a, const Mat3& b) {
  return geodesic_angle(a * b.transpose());
}

double translation_distance(const Pose& a, const Pose& b) {
  return (a.translation - b.translation).norm();
}

AxisAngle log_rotation(const Mat3& r) {
  AxisAngle out;
  const double angle = geodesic_angle(r);
  out.angle = angle;
  const Vec3 v = vee(r);
  if (angle < kSmallAngle) {
    const double n = v.norm();
    out.axis = n > 0.0 ? Vec3(v / n) : Vec3::UnitX();
    return out;
  }
  if (angle > kNearPi) {
    // a a^T = (sym(R) - cos(theta) I) / (1 - cos(theta)); take the column with
    // the largest diagonal entry and fix the sign from the skew part.
    const double c = std::cos(angle);
    const Mat3 outer = (0.5 * (r + r.transpose()) - c * Mat3::Identity()) / (1.0 - c);
    Eigen::Index k = 0;
    outer.diagonal().maxCoeff(&k);
    Vec3 axis = outer.col(k) / std::sqrt(std::max(outer(k, k), 1e-300));
    axis.normalize();
    if (axis.dot(v) < 0.0) {
      axis = -axis;
    }
    out.axis = axis;
    return out;
  }
  out.axis = v / (2.0 * std::sin(angle));
  out.axis.normalize();
  return out;
}

Vec3 log_vector(const Mat3& r) {
  const AxisAngle aa = log_rotation(r);
  return aa.axis * aa.angle;
}

Mat3 exp_rotation(const Vec3& rotation_vector) {
  const double angle = rotation_vector.norm();
  if (angle < 1e-15) {
    return Mat3::Identity() + skew(rotation_vector);
  }
  return Eigen::AngleAxisd(angle, rotation_vector / angle).toRotationMatrix();
}

Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  return m;
}

Twist pose_error(const Pose& current, const Pose& desired) {
  Twist e;
  e.linear = desired.translation - current.translation;
  if (desired.rotation != current.rotation) {
    e.angular = log_vector(desired.rotation * current.rotation.transpose());
  }
  return e;
}

std::vector<Vec3> fibonacci_sphere(std::size_t n) {
  if (n == 0) {
    throw std::invalid_argument("fibonacci_sphere requires n >= 1");
  }
  const double golden_angle = std::numbers::pi * (3.0 - std::sqrt(5.0));
  std::vector<Vec3> points;
  points.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double z = 1.0 - 2.0 * (static_cast<double>(i) + 0.5) / static_cast<double>(n);
    const double radius = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double theta = golden_angle * static_cast<double>(i);
    points.emplace_back(radius * std::cos(theta), radius * std::sin(theta), z);
  }
  return points;
}

bool is_rotation(const Mat3& r, double tol) {
  return r.allFinite() && (r * r.transpose() - Mat3::Identity()).cwiseAbs().maxCoeff() <= tol &&
         std::abs(r.determinant() - 1.0) <= tol;
}

void FrameRegistry::set(const std::string& name, const Pose& world_to_frame) {
  if (name == kWorld) {
    throw std::invalid_argument("the world frame is fixed to identity");
  }
  if (!is_rotation(world_to_frame.rotation, 1e-9) || !world_to_frame.translation.allFinite()) {
    throw std::invalid_argument("frame '" + name + "' is not a valid rigid transform");
  }
  frames_[name] = world_to_frame;
}

Pose FrameRegistry::at(const std::string& name) const {
  if (name == kWorld) {
    return Pose::identity();
  }
  const auto it = frames_.find(name);
  if (it == frames_.end()) {
    throw std::out_of_range("unknown frame '" + name + "'");
  }
  return it->second;
}

bool FrameRegistry::contains(const std::string& name) const {
  return name == kWorld || frames_.count(name) > 0;
}

std::vector<std::string> FrameRegistry::names() const {
  std::vector<std::string> out{kWorld};
  for (const auto& [name, pose] : frames_) {
    out.push_back(name);
  }
  return out;
}

}  // namespace wandteleop
