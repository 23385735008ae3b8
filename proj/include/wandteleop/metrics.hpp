#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wandteleop/geometry.hpp"
#include "wandteleop/mappings.hpp"
#include "wandteleop/session_log.hpp"
#include "wandteleop/task.hpp"

namespace wandteleop {

// Which pose stream of a slice a metric looks at. Desired is the commanded
// effector E_R*, Robot the servoed effector E_R.
enum class Subject { Hand, Desired, Robot };

// One target attempt, from target_shown to target_achieved (or timeout).
struct ReachSlice {
  MappingMode mode = MappingMode::Direct;
  int trial = 0;
  TargetSpec target;
  bool visualization_on = true;
  bool achieved = false;
  std::vector<double> t;
  std::vector<Pose> hand;
  std::vector<Pose> desired;
  std::vector<Pose> robot;

  std::size_t size() const { return t.size(); }
  const std::vector<Pose>& poses(Subject subject) const;
  // Where `subject` must end up: the hand endpoint for the hand, the
  // effector target otherwise.
  const Pose& goal(Subject subject) const;
};

std::vector<ReachSlice> extract_slices(const SessionLog& log);

// t(achieved) - t(shown); absent for unachieved slices.
std::optional<double> time_per_target(const ReachSlice& slice);

struct Overshoot {
  std::optional<double> translation;  // percent of tolerance
  std::optional<double> rotation;
};

// Per channel, on the desired effector: after the error first enters the
// tolerance band, the largest excursion above the band as a percentage of
// the band. Absent for a channel that never enters.
Overshoot overshoot_percent(const ReachSlice& slice);

// First time (from shown) after which translation and rotation progress
// toward the goal both stay >= `level` until the end of the slice. Progress is
// 1 - d(t)/d(0); a channel with zero initial error counts as complete. Crossings
// are interpolated linearly between samples. Absent if the level is not held
// at the end of the slice.
std::optional<double> response_time_80(const ReachSlice& slice, Subject subject = Subject::Desired,
                                       double level = 0.8);

struct Segmentation {
  double split_time = 0.0;      // from slice start
  double split_fraction = 0.5;  // of the slice duration
  std::size_t split_index = 0;
  bool fallback = false;        // no interior minimum after the speed peak
};

// Ballistic/adjust split: first local minimum after the global peak of the
// smoothed combined speed |v|/D_T + |w|/D_R (centered moving average of
// `window` seconds). Falls back to 50% of the duration.
Segmentation segment_ballistic(const ReachSlice& slice, Subject subject = Subject::Hand,
                               double window = 0.15);

struct ProgressCurves {
  std::vector<double> s;
  std::vector<double> median_translation;
  std::vector<double> sd_translation;
  std::vector<double> median_rotation;
  std::vector<double> sd_rotation;
};

// Each slice resampled on s in [0, 1] (shown -> end) with per-channel
// progress toward the slice's final pose; pointwise median and sample SD.
ProgressCurves normalized_curves(std::span<const ReachSlice> slices, Subject subject,
                                 std::size_t grid = 101);

enum class Window { Ballistic, Full };

struct CoordinationCurve {
  std::vector<double> translation;  // grid 0, 0.01, ..., 1
  std::vector<double> rotation;
  bool degenerate_translation = false;
  bool degenerate_rotation = false;

  // Mean of (rotation - translation) over the grid; > 0 means above y = x.
  double mean_signed_deviation() const;
};

// Rotation progress against translation progress for `subject` over the
// window, each progress measured toward the pose at the window end and
// resampled at translation progress 0, 0.01, ..., 1. The ballistic window
// always comes from the hand's segmentation so that all subjects share it.
// A channel without displacement collapses the curve onto an axis: (0, s)
// when translation is degenerate, (s, 0) when rotation is.
CoordinationCurve coordination_curve(const ReachSlice& slice, Subject subject, Window window,
                                     std::size_t grid = 101);

struct TargetMetrics {
  MappingMode mode = MappingMode::Direct;
  int trial = 0;
  int target = 0;
  TargetKind kind = TargetKind::Central;
  bool visualization_on = true;
  bool achieved = false;
  std::optional<double> duration;
  std::optional<double> overshoot_translation;
  std::optional<double> overshoot_rotation;
  std::optional<double> response_time;
};

std::vector<TargetMetrics> compute_target_metrics(std::span<const ReachSlice> slices);
void write_target_csv(std::ostream& out, std::span<const TargetMetrics> rows);

struct SummaryRow {
  std::string group;  // e.g. "direct/trial=4" or "wand/visualization=off"
  std::string metric;
  std::size_t count = 0;
  double median = 0.0;
  double q25 = 0.0;
  double q75 = 0.0;
  double sd = 0.0;
};

// Distribution summaries per mode x trial and per mode x visualization.
std::vector<SummaryRow> summarize(std::span<const TargetMetrics> rows);
void write_summary_csv(std::ostream& out, std::span<const SummaryRow> rows);

double median(std::vector<double> values);
double quantile(std::vector<double> values, double q);
double sample_sd(std::span<const double> values);

}  // namespace wandteleop
