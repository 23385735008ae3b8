#include <doctest.h>

#include <numbers>
#include <sstream>

#include "helpers.hpp"
#include "wandteleop/metrics.hpp"
#include "wandteleop/operator.hpp"
#include "wandteleop/session.hpp"

using namespace wandteleop;
using doctest::Approx;

namespace {

// Desired effector on the x axis at the given distances from a target at the origin.
ReachSlice slice_from_distances(const std::vector<double>& d, double dt = 0.01) {
  ReachSlice s;
  s.achieved = true;
  for (std::size_t i = 0; i < d.size(); ++i) {
    s.t.push_back(dt * static_cast<double>(i));
    const Pose p = Pose::from_translation({d[i], 0.0, 0.0});
    s.hand.push_back(p);
    s.desired.push_back(p);
    s.robot.push_back(p);
  }
  return s;
}

// Samples a reach plan through a mapping into a slice covering the reach.
ReachSlice slice_from_plan(const ReachPlan& plan, const MappingState& m, double dt = 0.01) {
  ReachSlice s;
  s.achieved = true;
  s.target.hand_endpoint = plan.to;
  s.target.effector_target = m.desired_pose(plan.to);
  const int n = static_cast<int>(std::lround(plan.duration / dt));
  for (int i = 0; i <= n; ++i) {
    const double t = dt * i;
    const Pose h = hand_pose_at(plan, t);
    s.t.push_back(t);
    s.hand.push_back(h);
    s.desired.push_back(m.desired_pose(h));
    s.robot.push_back(m.desired_pose(h));
  }
  return s;
}

}  // namespace

TEST_CASE("overshoot on constructed trajectories") {
  // tolerance 0.02 m: enter, rise to 0.03 (50% above), settle
  {
    auto s = slice_from_distances({0.10, 0.05, 0.015, 0.025, 0.03, 0.02, 0.0});
    CHECK(*overshoot_percent(s).translation == Approx(50.0).epsilon(1e-12));
  }
  {
    auto s = slice_from_distances({0.10, 0.05, 0.019, 0.02, 0.01, 0.0});
    CHECK(*overshoot_percent(s).translation == 0.0);
  }
  {
    auto s = slice_from_distances({0.10, 0.018, 0.022, 0.005});
    CHECK(*overshoot_percent(s).translation == Approx(10.0).epsilon(1e-12));
  }
  {
    // excursions before first entry do not count
    auto s = slice_from_distances({0.10, 0.20, 0.01, 0.0});
    CHECK(*overshoot_percent(s).translation == 0.0);
  }
  {
    auto s = slice_from_distances({0.10, 0.05, 0.03});
    CHECK(!overshoot_percent(s).translation);
  }
  // rotation channel on its own band
  ReachSlice r = slice_from_distances({0.0, 0.0, 0.0, 0.0});
  const double tol = r.target.tol_rotation;
  const std::vector<double> angles{3 * tol, 0.5 * tol, 1.5 * tol, 0.0};
  for (std::size_t i = 0; i < angles.size(); ++i) {
    r.desired[i] = Pose::from_axis_angle(Vec3::UnitZ(), angles[i]);
  }
  CHECK(*overshoot_percent(r).rotation == Approx(50.0).epsilon(1e-9));
}

TEST_CASE("response time on a linear approach") {
  // 0.2 m closed linearly over 2 s: 80% progress at 1.6 s
  std::vector<double> d;
  for (int i = 0; i <= 200; ++i) {
    d.push_back(0.2 * (1.0 - i / 200.0));
  }
  auto s = slice_from_distances(d);
  CHECK(*response_time_80(s) == Approx(1.6).epsilon(1e-9));
  CHECK(*response_time_80(s, Subject::Desired, 0.5) == Approx(1.0).epsilon(1e-9));
  // interpolation between coarse samples
  auto coarse = slice_from_distances({0.2, 0.1, 0.0}, 1.0);
  CHECK(*response_time_80(coarse) == Approx(1.6).epsilon(1e-12));
  // leaving again after crossing moves the response time later
  auto back = slice_from_distances({0.2, 0.0, 0.1, 0.0}, 1.0);
  CHECK(*response_time_80(back) == Approx(2.6).epsilon(1e-12));
  // never held at the end
  auto never = slice_from_distances({0.2, 0.1, 0.05}, 1.0);
  CHECK(!response_time_80(never));
}

TEST_CASE("response time on an exponential approach") {
  std::vector<double> d;
  for (int i = 0; i <= 1000; ++i) {
    d.push_back(0.1 * std::exp(-0.5 * 0.01 * i));
  }
  auto s = slice_from_distances(d);
  // 1 - e^{-0.5 t} = 0.8  ->  t = 2 ln 5
  CHECK(*response_time_80(s) == Approx(2.0 * std::log(5.0)).epsilon(1e-4));
}

TEST_CASE("segmentation recovers the phase boundary of two-phase reaches") {
  const Pose start = Pose::from_translation({0.0, 0.0, 0.4});
  const MappingState m = init_mapping(MappingMode::Direct, start, start);
  for (double fraction : {0.4, 0.5, 0.6}) {
    ReachPlan p;
    p.from = start;
    p.to = Pose::from_axis_angle(Vec3::UnitY(), 0.5, {0.15, 0.0, 0.4});
    p.ballistic_fraction = fraction;
    const auto s = slice_from_plan(p, m);
    const Segmentation seg = segment_ballistic(s);
    CHECK(!seg.fallback);
    CHECK(std::abs(seg.split_fraction - fraction) <= 0.05);
  }
}

TEST_CASE("segmentation on a bimodal speed profile") {
  // two separated bumps: split lands in the gap
  std::vector<double> d;
  double x = 1.0;
  for (int i = 0; i <= 300; ++i) {
    const double t = i * 0.01;
    double v = 0.0;
    if (t < 1.0) {
      v = std::sin(std::numbers::pi * t);
    } else if (t > 1.2 && t < 2.2) {
      v = 0.3 * std::sin(std::numbers::pi * (t - 1.2));
    }
    x -= 0.01 * v;
    d.push_back(x);
  }
  auto s = slice_from_distances(d);
  const Segmentation seg = segment_ballistic(s, Subject::Hand, 0.05);
  CHECK(!seg.fallback);
  CHECK(seg.split_time >= 0.95);
  CHECK(seg.split_time <= 1.25);
}

TEST_CASE("segmentation falls back on a single bump") {
  std::vector<double> d;
  for (int i = 0; i <= 100; ++i) {
    d.push_back(1.0 - minimum_jerk(i / 100.0));
  }
  auto s = slice_from_distances(d);
  const Segmentation seg = segment_ballistic(s);
  CHECK(seg.fallback);
  CHECK(seg.split_fraction == 0.5);
  CHECK_THROWS(segment_ballistic(slice_from_distances({1.0, 0.5, 0.0})));
}

TEST_CASE("normalized curves of identical slices have zero spread") {
  std::vector<double> d;
  for (int i = 0; i <= 100; ++i) {
    d.push_back(0.3 * (1.0 - minimum_jerk(i / 100.0)));
  }
  const auto s = slice_from_distances(d);
  std::vector<ReachSlice> slices(5, s);
  const auto c = normalized_curves(slices, Subject::Desired);
  REQUIRE(c.s.size() == 101);
  for (std::size_t k = 0; k < c.s.size(); ++k) {
    CHECK(c.sd_translation[k] == 0.0);
    CHECK(c.median_translation[k] == Approx(minimum_jerk(c.s[k])).epsilon(1e-9));
    CHECK(c.median_rotation[k] == 1.0);
  }
  // stretching a slice in time does not change its normalized curve
  auto slow = slice_from_distances(d, 0.03);
  const std::vector<ReachSlice> mixed{s, slow};
  const auto m = normalized_curves(mixed, Subject::Desired);
  for (std::size_t k = 0; k < m.s.size(); ++k) {
    CHECK(m.sd_translation[k] < 1e-12);
  }
}

TEST_CASE("coordination: direct effector mirrors the hand, wand effector leads in rotation") {
  const Pose start = Pose::from_translation({0.0, 0.0, 0.4});
  const WandGeometry wand;
  const Pose e0 = initial_effector_pose(start, wand);
  const MappingState direct = init_mapping(MappingMode::Direct, start, e0);
  const MappingState wand_map = init_mapping(MappingMode::Wand, start, e0);
  std::mt19937_64 rng(4);
  for (int i = 0; i < 20; ++i) {
    ReachPlan p;
    p.from = start;
    // rotation-dominant: axis well away from the wand, small hand translation
    Vec3 axis = testutil::random_unit(rng);
    while (std::abs(axis.x()) > 0.5) {
      axis = testutil::random_unit(rng);
    }
    const Vec3 shift = 0.01 * testutil::random_unit(rng);
    p.to = compose(Pose::from_translation(start.translation + shift),
                   Pose::from_axis_angle(axis, 0.7));
    const auto sd = slice_from_plan(p, direct);
    const auto sw = slice_from_plan(p, wand_map);
    for (auto w : {Window::Ballistic, Window::Full}) {
      const auto hand = coordination_curve(sd, Subject::Hand, w);
      const auto eff = coordination_curve(sd, Subject::Desired, w);
      for (std::size_t k = 0; k < hand.rotation.size(); ++k) {
        CHECK(std::abs(hand.rotation[k] - eff.rotation[k]) < 1e-9);
      }
      const auto whand = coordination_curve(sw, Subject::Hand, w);
      const auto weff = coordination_curve(sw, Subject::Desired, w);
      CHECK(whand.mean_signed_deviation() <= 1e-9);
      CHECK(weff.mean_signed_deviation() > 0.0);
    }
  }
  // pure rotation: remaining tip chord shrinks slower than the remaining angle
  ReachPlan turn;
  turn.from = start;
  turn.to = compose(start, Pose::from_axis_angle(Vec3::UnitZ(), 0.8));
  const auto c = coordination_curve(slice_from_plan(turn, wand_map), Subject::Desired, Window::Full);
  for (std::size_t k = 1; k + 1 < c.rotation.size(); ++k) {
    const double s = c.rotation[k];
    // translation progress at rotation progress s is 1 - sin((1-s) a/2)/sin(a/2)
    const double expect = 1.0 - std::sin((1.0 - s) * 0.4) / std::sin(0.4);
    CHECK(c.translation[k] == Approx(expect).epsilon(1e-3));
  }
}

TEST_CASE("coordination collapses onto an axis for single-channel motion") {
  std::vector<double> d;
  for (int i = 0; i <= 50; ++i) {
    d.push_back(0.1 * (1.0 - i / 50.0));
  }
  const auto s = slice_from_distances(d);
  const auto c = coordination_curve(s, Subject::Desired, Window::Full);
  CHECK(c.degenerate_rotation);
  CHECK(!c.degenerate_translation);
  CHECK(c.rotation.back() == 0.0);
  CHECK(c.translation.back() == 1.0);
}

TEST_CASE("metrics on a simulated session") {
  ExperimentConfig cfg;
  cfg.trials_per_mode = 2;
  cfg.visualization_off_trials = {2};
  cfg.protocol.outer_count = 3;
  const auto run = run_experiment(cfg);
  std::vector<TargetMetrics> rows;
  for (const auto& log : run.logs) {
    const auto slices = extract_slices(log);
    CHECK(slices.size() == 12);
    for (const auto& s : slices) {
      CHECK(s.achieved);
      CHECK(*time_per_target(s) >= s.target.dwell);
      CHECK(s.visualization_on == (s.trial != 2));
    }
    const auto m = compute_target_metrics(slices);
    rows.insert(rows.end(), m.begin(), m.end());
  }
  const auto summary = summarize(rows);
  bool saw_off = false;
  for (const auto& r : summary) {
    saw_off = saw_off || r.group == "wand/visualization=off";
    CHECK(r.q25 <= r.median);
    CHECK(r.median <= r.q75);
  }
  CHECK(saw_off);
  std::ostringstream csv;
  write_target_csv(csv, rows);
  CHECK(csv.str().rfind("mode,trial,target", 0) == 0);
  std::ostringstream sum;
  write_summary_csv(sum, summary);
  CHECK(sum.str().find("direct/trial=01,duration_s,6,") != std::string::npos);
}

TEST_CASE("summary statistics") {
  CHECK(median({3.0, 1.0, 2.0}) == 2.0);
  CHECK(median({4.0, 1.0, 2.0, 3.0}) == 2.5);
  CHECK(quantile({1.0, 2.0, 3.0, 4.0, 5.0}, 0.25) == 2.0);
  const std::vector<double> v{2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0};
  CHECK(sample_sd(v) == Approx(std::sqrt(32.0 / 7.0)).epsilon(1e-12));
  const std::vector<double> same(4, 0.1);
  CHECK(sample_sd(same) == 0.0);
  CHECK_THROWS(median({}));
}
