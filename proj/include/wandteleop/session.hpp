#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "wandteleop/config.hpp"
#include "wandteleop/mappings.hpp"
#include "wandteleop/operator.hpp"
#include "wandteleop/robot.hpp"
#include "wandteleop/session_log.hpp"
#include "wandteleop/task.hpp"

namespace wandteleop {

// What an input source may know about the upcoming tick.
struct TickContext {
  double t = 0.0;
  int trial = 0;
  const TargetSpec* target = nullptr;
  double target_shown_at = 0.0;
  bool new_target = false;  // this tick shows `target` for the first time
};

class InputSource {
 public:
  virtual ~InputSource() = default;
  virtual void begin_trial(int /*trial*/, const Pose& /*hand_start*/) {}
  virtual Pose hand_at(const TickContext& ctx) = 0;
};

// Reaches each shown target's hand endpoint with a ReachPlan, then holds.
class SyntheticOperator : public InputSource {
 public:
  explicit SyntheticOperator(OperatorConfig model = {}, std::uint64_t seed = 0)
      : model_(model), seed_(seed) {}

  void begin_trial(int trial, const Pose& hand_start) override;
  Pose hand_at(const TickContext& ctx) override;

 private:
  OperatorConfig model_;
  std::uint64_t seed_;
  Pose hand_;
  std::optional<ReachPlan> plan_;
  int trial_ = 0;
};

// Hand held at the trial's start pose.
class FrozenInput : public InputSource {
 public:
  void begin_trial(int, const Pose& hand_start) override { hand_ = hand_start; }
  Pose hand_at(const TickContext&) override { return hand_; }

 private:
  Pose hand_;
};

// Plays back hand poses one per tick; the last pose is held when exhausted.
class RecordedInput : public InputSource {
 public:
  explicit RecordedInput(std::vector<Pose> hands) : hands_(std::move(hands)) {}
  static RecordedInput from_log(const SessionLog& log);

  Pose hand_at(const TickContext&) override;
  std::size_t consumed() const { return next_; }

 private:
  std::vector<Pose> hands_;
  std::size_t next_ = 0;
};

struct TargetOutcome {
  int index = 0;
  TargetKind kind = TargetKind::Central;
  double shown_at = 0.0;
  std::optional<double> achieved_at;
  std::size_t first_record = 0;
  std::size_t last_record = 0;

  bool achieved() const { return achieved_at.has_value(); }
  std::optional<double> duration() const;
};

struct TrialResult {
  MappingMode mode = MappingMode::Direct;
  int trial = 0;
  bool visualization_on = true;
  std::vector<TargetOutcome> targets;

  std::size_t achieved_count() const;
};

// Fixed-step loop for one mapping mode. Each tick: read hand -> desired pose
// -> dwell adjudication on the current robot pose -> log -> servo step.
// Time runs continuously across trials at t = tick * dt.
class ModeRunner {
 public:
  ModeRunner(ExperimentConfig config, MappingMode mode);

  void begin_trial(int trial);
  TickContext next_context() const;
  const LogRecord& tick(const Pose& hand);
  // Reads the source with next_context() and ticks.
  const LogRecord& tick(InputSource& source);

  bool trial_done() const { return trial_done_; }
  bool trial_active() const { return trial_ > 0 && !trial_done_; }
  int trial() const { return trial_; }
  double now() const { return static_cast<double>(tick_) * config_.servo.dt; }
  std::uint64_t tick_index() const { return tick_; }

  MappingMode mode() const { return mode_; }
  const ExperimentConfig& config() const { return config_; }
  const MappingState& mapping() const { return mapping_; }
  const RobotState& robot() const { return robot_; }
  const KinematicChain& chain() const { return chain_; }
  const std::vector<TargetSpec>& targets() const { return targets_; }
  const TargetSpec* current_target() const;
  const DwellTracker& tracker() const { return tracker_; }
  const TrialResult& current_result() const { return result_; }

  void set_timeouts_enabled(bool on) { timeouts_enabled_ = on; }
  void set_keep_records(bool on) { keep_records_ = on; }
  void set_record_sink(std::function<void(const LogRecord&)> sink) { sink_ = std::move(sink); }

  const LogRecord& last_record() const { return last_; }
  const SessionLog& log() const { return log_; }
  SessionLog take_log() { return std::move(log_); }

 private:
  void advance_target(LogRecord& rec);

  ExperimentConfig config_;
  MappingMode mode_;
  KinematicChain chain_;
  Pose effector_start_;
  Eigen::VectorXd q_start_;
  std::vector<TargetSpec> targets_;

  MappingState mapping_;
  RobotState robot_;
  DwellTracker tracker_;
  TrialResult result_;
  int trial_ = 0;
  std::size_t target_ = 0;
  double shown_at_ = 0.0;
  bool trial_done_ = false;
  std::vector<EventKind> pending_;
  std::uint64_t tick_ = 0;

  bool timeouts_enabled_ = true;
  bool keep_records_ = true;
  std::function<void(const LogRecord&)> sink_;
  LogRecord last_;
  SessionLog log_;
};

// Runs one complete trial (all targets) on `runner`.
TrialResult run_trial(ModeRunner& runner, int trial, InputSource& source);

struct TrialRun {
  SessionLog log;
  TrialResult result;
};
TrialRun run_trial(const ExperimentConfig& config, MappingMode mode, int trial,
                   InputSource& source);

struct ExperimentRun {
  std::vector<SessionLog> logs;      // one per mode, in mode_order
  std::vector<TrialResult> trials;   // mode-major
  std::size_t attempted() const;
  std::size_t achieved() const;
};

using SourceFactory = std::function<std::unique_ptr<InputSource>(MappingMode)>;

// Every mode in mode_order, trials 1..trials_per_mode; synthetic operator
// unless a factory is supplied.
ExperimentRun run_experiment(const ExperimentConfig& config, const SourceFactory& factory = {});

struct ReplayReport {
  std::size_t records = 0;
  double max_desired_translation = 0.0;
  double max_desired_rotation = 0.0;
  double max_robot_translation = 0.0;
  double max_robot_rotation = 0.0;
  double max_joint = 0.0;
  bool structure_matches = true;  // same trials, targets and events per record

  double max_deviation() const;
};

// Feeds the log's hand records back through mapping, servo and dwell logic and
// compares the regenerated desired/robot streams with the logged ones.
ReplayReport replay_log(const SessionLog& log);

}  // namespace wandteleop
