#include <doctest.h>

#include <numbers>

#include "helpers.hpp"
#include "wandteleop/geometry.hpp"
#include "wandteleop/json_io.hpp"

using namespace wandteleop;
using doctest::Approx;

TEST_CASE("compose and invert") {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 200; ++i) {
    const Pose a = testutil::random_pose(rng);
    const Pose b = testutil::random_pose(rng);
    const Pose c = testutil::random_pose(rng);
    CHECK(testutil::max_abs_diff(compose(a, invert(a)), Pose::identity()) < 1e-12);
    CHECK(testutil::max_abs_diff(compose(compose(a, b), c), compose(a, compose(b, c))) < 1e-12);
    // homogeneous matrix oracle
    const Eigen::Matrix4d m = a.matrix() * b.matrix();
    CHECK((compose(a, b).matrix() - m).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("quaternion round trip and canonical sign") {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 200; ++i) {
    const Pose p = testutil::random_pose(rng);
    const auto q = p.quaternion();
    CHECK(q[0] >= 0.0);
    const Pose back = Pose::from_quaternion(q, p.translation);
    CHECK(testutil::max_abs_diff(p, back) < 1e-12);
  }
  // q and -q describe the same rotation
  const Pose a = Pose::from_quaternion({0.5, 0.5, 0.5, 0.5}, Vec3::Zero());
  const Pose b = Pose::from_quaternion({-0.5, -0.5, -0.5, -0.5}, Vec3::Zero());
  CHECK(testutil::max_abs_diff(a, b) < 1e-15);
  CHECK(b.quaternion()[0] > 0.0);
}

TEST_CASE("quaternion ingest tolerance") {
  const double s = 1.0 + 5e-7;
  const Pose p = Pose::from_quaternion({s, 0.0, 0.0, 0.0}, Vec3::Zero());
  CHECK(is_rotation(p.rotation, 1e-12));
  CHECK_NOTHROW(Pose::from_quaternion({1.0 + 5e-4, 0.0, 0.0, 0.0}, Vec3::Zero()));
  CHECK_THROWS_AS(Pose::from_quaternion({1.002, 0.0, 0.0, 0.0}, Vec3::Zero()),
                  std::invalid_argument);
  CHECK_THROWS_AS(Pose::from_quaternion({0.0, 0.0, 0.0, 0.0}, Vec3::Zero()),
                  std::invalid_argument);
}

TEST_CASE("geodesic angle matches the quaternion angle") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, std::numbers::pi);
  for (int i = 0; i < 500; ++i) {
    const double angle = u(rng);
    const Eigen::Quaterniond q(Eigen::AngleAxisd(angle, testutil::random_unit(rng)));
    // oracle: 2 acos(|w|)
    const double oracle = 2.0 * std::acos(std::min(1.0, std::abs(q.w())));
    CHECK(geodesic_angle(q.toRotationMatrix()) == Approx(oracle).epsilon(1e-9));
  }
  CHECK(geodesic_angle(Mat3::Identity()) == 0.0);
  const Mat3 tiny = Eigen::AngleAxisd(1e-9, Vec3::UnitZ()).toRotationMatrix();
  CHECK(geodesic_angle(tiny) == Approx(1e-9).epsilon(1e-6));
}

TEST_CASE("log and exp are inverse, including near pi") {
  std::mt19937_64 rng(5);
  for (double angle : {0.0, 1e-12, 1e-6, 0.3, 1.5, 3.0, std::numbers::pi - 1e-3,
                       std::numbers::pi - 5e-5, std::numbers::pi - 1e-8, std::numbers::pi}) {
    for (int i = 0; i < 20; ++i) {
      const Vec3 axis = testutil::random_unit(rng);
      const Mat3 r = Eigen::AngleAxisd(angle, axis).toRotationMatrix();
      const Vec3 v = log_vector(r);
      CHECK(v.norm() == Approx(angle).epsilon(1e-9));
      CHECK((exp_rotation(v) - r).cwiseAbs().maxCoeff() < 1e-9);
      if (angle > 1e-3 && angle < std::numbers::pi - 1e-3) {
        CHECK((v.normalized() - axis).norm() < 1e-9);
      }
    }
  }
}

TEST_CASE("pose error") {
  const Pose current = Pose::from_axis_angle(Vec3::UnitZ(), 0.2, {1.0, 2.0, 3.0});
  const Pose desired = Pose::from_axis_angle(Vec3::UnitZ(), 0.5, {1.5, 2.0, 2.0});
  const Twist e = pose_error(current, desired);
  CHECK((e.linear - Vec3(0.5, 0.0, -1.0)).norm() < 1e-15);
  CHECK((e.angular - Vec3(0.0, 0.0, 0.3)).norm() < 1e-12);
  CHECK(pose_error(current, current).is_zero());
}

TEST_CASE("rotation distance is symmetric and bi-invariant") {
  std::mt19937_64 rng(9);
  for (int i = 0; i < 100; ++i) {
    const Mat3 a = testutil::random_pose(rng).rotation;
    const Mat3 b = testutil::random_pose(rng).rotation;
    const Mat3 g = testutil::random_pose(rng).rotation;
    CHECK(rotation_distance(a, b) == Approx(rotation_distance(b, a)).epsilon(1e-9));
    CHECK(rotation_distance(g * a, g * b) == Approx(rotation_distance(a, b)).epsilon(1e-9));
    CHECK(rotation_distance(a * g, b * g) == Approx(rotation_distance(a, b)).epsilon(1e-9));
  }
}

TEST_CASE("fibonacci sphere") {
  const auto two = fibonacci_sphere(2);
  REQUIRE(two.size() == 2);
  CHECK(two[0].x() == Approx(0.86603).epsilon(1e-5));
  CHECK(two[0].y() == Approx(0.0).epsilon(1e-12));
  CHECK(two[0].z() == Approx(0.5).epsilon(1e-12));

  const auto one = fibonacci_sphere(1);
  CHECK(one[0].norm() == Approx(1.0));

  const auto pts = fibonacci_sphere(15);
  double min_sep = 10.0;
  Vec3 mean = Vec3::Zero();
  for (std::size_t i = 0; i < pts.size(); ++i) {
    CHECK(pts[i].norm() == Approx(1.0).epsilon(1e-12));
    mean += pts[i];
    if (i > 0) {
      CHECK(pts[i].z() < pts[i - 1].z());
    }
    for (std::size_t j = i + 1; j < pts.size(); ++j) {
      min_sep = std::min(min_sep, std::acos(std::clamp(pts[i].dot(pts[j]), -1.0, 1.0)));
    }
  }
  CHECK(min_sep >= 30.0 * std::numbers::pi / 180.0);
  CHECK(mean.norm() / 15.0 < 0.1);
  CHECK_THROWS(fibonacci_sphere(0));
}

TEST_CASE("frame registry") {
  FrameRegistry frames;
  CHECK(frames.contains(FrameRegistry::kWorld));
  CHECK(frames.at(FrameRegistry::kWorld) == Pose::identity());
  CHECK_THROWS_AS(frames.at("nope"), std::out_of_range);
  const Pose tracker = Pose::from_axis_angle(Vec3::UnitZ(), std::numbers::pi / 2, {1.0, 0.0, 0.0});
  frames.set(FrameRegistry::kTracker, tracker);
  const Pose in_o = Pose::from_translation({1.0, 0.0, 0.0});
  const Pose w = frames.to_world(FrameRegistry::kTracker, in_o);
  CHECK((w.translation - Vec3(1.0, 1.0, 0.0)).norm() < 1e-12);
}

TEST_CASE("pose json") {
  std::mt19937_64 rng(1);
  const Pose p = testutil::random_pose(rng);
  const json j = pose_to_json(p);
  CHECK(j.at("q").size() == 4);
  CHECK(testutil::max_abs_diff(pose_from_json(j), p) < 1e-12);
  CHECK_THROWS(pose_from_json(json{{"p", {0, 0}}, {"q", {1, 0, 0, 0}}}));
}
