#include "wandteleop/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <ostream>
#include <stdexcept>

namespace wandteleop {

namespace {

constexpr double kDegenerateTranslation = 1e-9;  // m
constexpr double kDegenerateRotation = 1e-9;     // rad

struct ChannelErrors {
  std::vector<double> translation;
  std::vector<double> rotation;
};

ChannelErrors errors_to(const std::vector<Pose>& poses, const Pose& ref, std::size_t begin,
                        std::size_t end) {
  ChannelErrors e;
  e.translation.reserve(end - begin);
  e.rotation.reserve(end - begin);
  for (std::size_t i = begin; i < end; ++i) {
    e.translation.push_back(translation_distance(poses[i], ref));
    e.rotation.push_back(rotation_distance(poses[i].rotation, ref.rotation));
  }
  return e;
}

// 1 - d/d0, or all ones when the channel starts on its goal.
std::vector<double> progress(const std::vector<double>& d, double degenerate) {
  std::vector<double> p(d.size(), 1.0);
  if (d.empty() || d.front() <= degenerate) {
    return p;
  }
  for (std::size_t i = 0; i < d.size(); ++i) {
    p[i] = 1.0 - d[i] / d.front();
  }
  return p;
}

std::optional<double> overshoot_channel(const std::vector<double>& d, double tol) {
  const auto entry = std::find_if(d.begin(), d.end(), [tol](double v) { return v <= tol; });
  if (entry == d.end()) {
    return std::nullopt;
  }
  const double peak = *std::max_element(entry, d.end());
  return std::max(0.0, peak - tol) / tol * 100.0;
}

// Time after which p stays >= level; nullopt if it is below at the end.
std::optional<double> hold_time(const std::vector<double>& t, const std::vector<double>& p,
                                double level) {
  std::optional<std::size_t> last_below;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] < level) {
      last_below = i;
    }
  }
  if (!last_below) {
    return t.front();
  }
  const std::size_t j = *last_below;
  if (j + 1 >= p.size()) {
    return std::nullopt;
  }
  const double frac = (level - p[j]) / (p[j + 1] - p[j]);
  return t[j] + frac * (t[j + 1] - t[j]);
}

double interp(const std::vector<double>& x, const std::vector<double>& y, double xq) {
  if (xq <= x.front()) {
    return y.front();
  }
  if (xq >= x.back()) {
    return y.back();
  }
  const auto it = std::upper_bound(x.begin(), x.end(), xq);
  const std::size_t i = static_cast<std::size_t>(it - x.begin());
  const double f = (xq - x[i - 1]) / (x[i] - x[i - 1]);
  return y[i - 1] + f * (y[i] - y[i - 1]);
}

std::string fmt_opt(const std::optional<double>& v) {
  if (!v) {
    return "";
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", *v);
  return buf;
}

}  // namespace

const std::vector<Pose>& ReachSlice::poses(Subject subject) const {
  switch (subject) {
    case Subject::Hand:
      return hand;
    case Subject::Desired:
      return desired;
    case Subject::Robot:
      return robot;
  }
  return desired;
}

const Pose& ReachSlice::goal(Subject subject) const {
  return subject == Subject::Hand ? target.hand_endpoint : target.effector_target;
}

std::vector<ReachSlice> extract_slices(const SessionLog& log) {
  std::vector<ReachSlice> slices;
  ReachSlice* open = nullptr;
  for (const auto& r : log.records) {
    if (r.has_event(EventKind::TargetShown)) {
      ReachSlice s;
      s.mode = log.header.mode;
      s.trial = r.trial;
      if (r.target < 0 || static_cast<std::size_t>(r.target) >= log.header.targets.size()) {
        throw std::runtime_error("log record refers to unknown target " + std::to_string(r.target));
      }
      s.target = log.header.targets[static_cast<std::size_t>(r.target)];
      s.visualization_on = log.header.config.visualization_on(r.trial);
      slices.push_back(std::move(s));
      open = &slices.back();
    }
    if (open == nullptr) {
      continue;
    }
    open->t.push_back(r.t);
    open->hand.push_back(r.hand);
    open->desired.push_back(r.desired);
    open->robot.push_back(r.robot);
    if (r.has_event(EventKind::TargetAchieved)) {
      open->achieved = true;
      open = nullptr;
    } else if (r.has_event(EventKind::TargetTimeout)) {
      open = nullptr;
    }
  }
  return slices;
}

std::optional<double> time_per_target(const ReachSlice& slice) {
  if (!slice.achieved || slice.t.empty()) {
    return std::nullopt;
  }
  return slice.t.back() - slice.t.front();
}

Overshoot overshoot_percent(const ReachSlice& slice) {
  const auto e = errors_to(slice.desired, slice.target.effector_target, 0, slice.desired.size());
  return {overshoot_channel(e.translation, slice.target.tol_translation),
          overshoot_channel(e.rotation, slice.target.tol_rotation)};
}

std::optional<double> response_time_80(const ReachSlice& slice, Subject subject, double level) {
  if (slice.t.empty()) {
    return std::nullopt;
  }
  const auto& poses = slice.poses(subject);
  const auto e = errors_to(poses, slice.goal(subject), 0, poses.size());
  const auto pt = hold_time(slice.t, progress(e.translation, kDegenerateTranslation), level);
  const auto pr = hold_time(slice.t, progress(e.rotation, kDegenerateRotation), level);
  if (!pt || !pr) {
    return std::nullopt;
  }
  return std::max(*pt, *pr) - slice.t.front();
}

Segmentation segment_ballistic(const ReachSlice& slice, Subject subject, double window) {
  const std::size_t n = slice.size();
  if (n < 10) {
    throw std::invalid_argument("segmentation needs at least 10 samples");
  }
  const auto& poses = slice.poses(subject);
  const double duration = slice.t.back() - slice.t.front();
  if (!(duration > 0.0)) {
    throw std::invalid_argument("segmentation needs a slice of positive duration");
  }
  const double dt = duration / static_cast<double>(n - 1);
  const double span_t = translation_distance(poses.back(), poses.front());
  const double span_r = rotation_distance(poses.back().rotation, poses.front().rotation);

  std::vector<double> speed(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t a = i == 0 ? 0 : i - 1;
    const std::size_t b = i + 1 == n ? n - 1 : i + 1;
    const double h = slice.t[b] - slice.t[a];
    double v = 0.0;
    if (span_t > kDegenerateTranslation) {
      v += translation_distance(poses[b], poses[a]) / h / span_t;
    }
    if (span_r > kDegenerateRotation) {
      v += rotation_distance(poses[b].rotation, poses[a].rotation) / h / span_r;
    }
    speed[i] = v;
  }

  const auto half = static_cast<std::size_t>(std::llround(0.5 * window / dt));
  std::vector<double> smooth(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t a = i >= half ? i - half : 0;
    const std::size_t b = std::min(n - 1, i + half);
    double sum = 0.0;
    for (std::size_t k = a; k <= b; ++k) {
      sum += speed[k];
    }
    smooth[i] = sum / static_cast<double>(b - a + 1);
  }

  const auto peak_it = std::max_element(smooth.begin(), smooth.end());
  const auto peak = static_cast<std::size_t>(peak_it - smooth.begin());
  const double eps = 1e-9 * *peak_it;

  Segmentation seg;
  for (std::size_t i = peak; i + 1 < n; ++i) {
    if (smooth[i + 1] > smooth[i] + eps) {
      seg.split_index = i;
      seg.split_time = slice.t[i] - slice.t.front();
      seg.split_fraction = seg.split_time / duration;
      return seg;
    }
  }
  seg.fallback = true;
  seg.split_fraction = 0.5;
  seg.split_time = 0.5 * duration;
  seg.split_index = static_cast<std::size_t>(std::llround(0.5 * static_cast<double>(n - 1)));
  return seg;
}

ProgressCurves normalized_curves(std::span<const ReachSlice> slices, Subject subject,
                                 std::size_t grid) {
  if (slices.empty()) {
    throw std::invalid_argument("normalized_curves needs at least one slice");
  }
  if (grid < 2) {
    throw std::invalid_argument("grid needs at least two points");
  }
  ProgressCurves out;
  out.s.resize(grid);
  for (std::size_t k = 0; k < grid; ++k) {
    out.s[k] = static_cast<double>(k) / static_cast<double>(grid - 1);
  }

  std::vector<std::vector<double>> trans(grid), rot(grid);
  for (const auto& slice : slices) {
    if (slice.size() < 2) {
      throw std::invalid_argument("slice too short to normalize");
    }
    const auto& poses = slice.poses(subject);
    const auto e = errors_to(poses, poses.back(), 0, poses.size());
    const auto pt = progress(e.translation, kDegenerateTranslation);
    const auto pr = progress(e.rotation, kDegenerateRotation);
    const double t0 = slice.t.front();
    const double span = slice.t.back() - t0;
    std::vector<double> u(slice.size());
    for (std::size_t i = 0; i < u.size(); ++i) {
      u[i] = (slice.t[i] - t0) / span;
    }
    for (std::size_t k = 0; k < grid; ++k) {
      trans[k].push_back(interp(u, pt, out.s[k]));
      rot[k].push_back(interp(u, pr, out.s[k]));
    }
  }
  for (std::size_t k = 0; k < grid; ++k) {
    out.median_translation.push_back(median(trans[k]));
    out.sd_translation.push_back(sample_sd(trans[k]));
    out.median_rotation.push_back(median(rot[k]));
    out.sd_rotation.push_back(sample_sd(rot[k]));
  }
  return out;
}

double CoordinationCurve::mean_signed_deviation() const {
  if (translation.empty()) {
    return 0.0;
  }
  double sum = 0.0;
  for (std::size_t k = 0; k < translation.size(); ++k) {
    sum += rotation[k] - translation[k];
  }
  return sum / static_cast<double>(translation.size());
}

CoordinationCurve coordination_curve(const ReachSlice& slice, Subject subject, Window window,
                                     std::size_t grid) {
  if (slice.size() < 2) {
    throw std::invalid_argument("coordination curve needs at least two samples");
  }
  std::size_t end = slice.size() - 1;
  if (window == Window::Ballistic) {
    end = std::max<std::size_t>(1, segment_ballistic(slice, Subject::Hand).split_index);
  }
  const auto& poses = slice.poses(subject);
  const auto e = errors_to(poses, poses[end], 0, end + 1);
  CoordinationCurve c;
  c.degenerate_translation = e.translation.front() <= kDegenerateTranslation;
  c.degenerate_rotation = e.rotation.front() <= kDegenerateRotation;

  c.translation.resize(grid);
  c.rotation.resize(grid);
  for (std::size_t k = 0; k < grid; ++k) {
    const double s = static_cast<double>(k) / static_cast<double>(grid - 1);
    if (c.degenerate_translation || c.degenerate_rotation) {
      c.translation[k] = c.degenerate_translation ? 0.0 : s;
      c.rotation[k] = c.degenerate_rotation ? 0.0 : s;
      continue;
    }
    c.translation[k] = s;
  }
  if (c.degenerate_translation || c.degenerate_rotation) {
    return c;
  }

  const auto x = progress(e.translation, kDegenerateTranslation);
  const auto y = progress(e.rotation, kDegenerateRotation);
  for (std::size_t k = 0; k < grid; ++k) {
    const double s = c.translation[k];
    if (k == 0) {
      c.rotation[k] = y.front();
      continue;
    }
    std::size_t i = 0;
    while (i < x.size() && x[i] < s) {
      ++i;
    }
    if (i >= x.size()) {
      c.rotation[k] = y.back();
    } else if (i == 0) {
      c.rotation[k] = y.front();
    } else {
      const double f = (s - x[i - 1]) / (x[i] - x[i - 1]);
      c.rotation[k] = y[i - 1] + f * (y[i] - y[i - 1]);
    }
  }
  return c;
}

std::vector<TargetMetrics> compute_target_metrics(std::span<const ReachSlice> slices) {
  std::vector<TargetMetrics> rows;
  rows.reserve(slices.size());
  for (const auto& s : slices) {
    TargetMetrics m;
    m.mode = s.mode;
    m.trial = s.trial;
    m.target = s.target.index;
    m.kind = s.target.kind;
    m.visualization_on = s.visualization_on;
    m.achieved = s.achieved;
    m.duration = time_per_target(s);
    const Overshoot o = overshoot_percent(s);
    m.overshoot_translation = o.translation;
    m.overshoot_rotation = o.rotation;
    if (s.achieved) {
      m.response_time = response_time_80(s);
    }
    rows.push_back(m);
  }
  return rows;
}

void write_target_csv(std::ostream& out, std::span<const TargetMetrics> rows) {
  out << "mode,trial,target,kind,visualization,achieved,duration_s,overshoot_translation_pct,"
         "overshoot_rotation_pct,response_time_80_s\n";
  for (const auto& r : rows) {
    out << to_string(r.mode) << ',' << r.trial << ',' << r.target << ',' << to_string(r.kind) << ','
        << (r.visualization_on ? "on" : "off") << ',' << (r.achieved ? 1 : 0) << ','
        << fmt_opt(r.duration) << ',' << fmt_opt(r.overshoot_translation) << ','
        << fmt_opt(r.overshoot_rotation) << ',' << fmt_opt(r.response_time) << '\n';
  }
}

std::vector<SummaryRow> summarize(std::span<const TargetMetrics> rows) {
  // Ordered map keeps the table layout stable.
  std::map<std::pair<std::string, std::string>, std::vector<double>> groups;
  auto add = [&](const std::string& group, const char* metric, const std::optional<double>& v) {
    if (v) {
      groups[{group, metric}].push_back(*v);
    }
  };
  for (const auto& r : rows) {
    const std::string mode(to_string(r.mode));
    char trial[32];
    std::snprintf(trial, sizeof trial, "/trial=%02d", r.trial);
    const std::string by_trial = mode + trial;
    const std::string by_vis = mode + (r.visualization_on ? "/visualization=on" : "/visualization=off");
    for (const auto& g : {by_trial, by_vis}) {
      add(g, "duration_s", r.duration);
      add(g, "overshoot_translation_pct", r.overshoot_translation);
      add(g, "overshoot_rotation_pct", r.overshoot_rotation);
      add(g, "response_time_80_s", r.response_time);
    }
  }
  std::vector<SummaryRow> out;
  for (const auto& [key, values] : groups) {
    SummaryRow row;
    row.group = key.first;
    row.metric = key.second;
    row.count = values.size();
    row.median = median(values);
    row.q25 = quantile(values, 0.25);
    row.q75 = quantile(values, 0.75);
    row.sd = sample_sd(values);
    out.push_back(row);
  }
  return out;
}

void write_summary_csv(std::ostream& out, std::span<const SummaryRow> rows) {
  out << "group,metric,count,median,q25,q75,sd\n";
  for (const auto& r : rows) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%zu,%.6g,%.6g,%.6g,%.6g", r.count, r.median, r.q25, r.q75, r.sd);
    out << r.group << ',' << r.metric << ',' << buf << '\n';
  }
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) {
    throw std::invalid_argument("quantile of an empty set");
  }
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = static_cast<std::size_t>(std::ceil(pos));
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

double median(std::vector<double> values) { return quantile(std::move(values), 0.5); }

double sample_sd(std::span<const double> values) {
  if (values.size() < 2) {
    return 0.0;
  }
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  if (*lo == *hi) {
    return 0.0;
  }
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) {
    ss += (v - mean) * (v - mean);
  }
  return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

}  // namespace wandteleop
