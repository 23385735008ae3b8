#include "wandteleop/session.hpp"

#include <algorithm>
#include <stdexcept>

namespace wandteleop {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Bent-elbow seed for placing the joint-space robot on its start pose.
Eigen::VectorXd ik_seed(const KinematicChain& chain) {
  Eigen::VectorXd q = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(chain.size()));
  if (chain.size() == 7) {
    q << 0.0, 0.6, 0.0, 1.6, 0.0, 0.9, 0.0;
  }
  return q;
}

}  // namespace

void SyntheticOperator::begin_trial(int trial, const Pose& hand_start) {
  trial_ = trial;
  hand_ = hand_start;
  plan_.reset();
}

Pose SyntheticOperator::hand_at(const TickContext& ctx) {
  if (ctx.target == nullptr) {
    return hand_;
  }
  if (ctx.new_target || !plan_) {
    ReachPlan plan;
    plan.from = hand_;
    plan.to = ctx.target->hand_endpoint;
    plan.duration = model_.duration;
    plan.ballistic_fraction = model_.ballistic_fraction;
    plan.ballistic_amplitude = model_.ballistic_amplitude;
    plan.noise_scale = model_.noise_scale;
    plan.noise_seed = splitmix64(seed_ ^ splitmix64(static_cast<std::uint64_t>(trial_) * 1000 +
                                                    static_cast<std::uint64_t>(ctx.target->index)));
    plan_ = plan;
  }
  hand_ = hand_pose_at(*plan_, ctx.t - ctx.target_shown_at);
  return hand_;
}

RecordedInput RecordedInput::from_log(const SessionLog& log) {
  std::vector<Pose> hands;
  hands.reserve(log.records.size());
  for (const auto& r : log.records) {
    hands.push_back(r.hand);
  }
  return RecordedInput(std::move(hands));
}

Pose RecordedInput::hand_at(const TickContext&) {
  if (hands_.empty()) {
    throw std::runtime_error("recorded input is empty");
  }
  if (next_ < hands_.size()) {
    return hands_[next_++];
  }
  return hands_.back();
}

std::optional<double> TargetOutcome::duration() const {
  if (!achieved_at) {
    return std::nullopt;
  }
  return *achieved_at - shown_at;
}

std::size_t TrialResult::achieved_count() const {
  return static_cast<std::size_t>(
      std::count_if(targets.begin(), targets.end(), [](const auto& t) { return t.achieved(); }));
}

ModeRunner::ModeRunner(ExperimentConfig config, MappingMode mode)
    : config_(std::move(config)), mode_(mode) {
  config_.validate();
  chain_ = config_.chain();
  chain_.validate();
  effector_start_ = config_.effector_start(mode_);
  // Targets are fixed for all trials of a mode; the visualization flag does
  // not enter the mapping output.
  targets_ = generate_targets(config_.seed, config_.mapping_for(mode_, 1), config_.hand_start,
                              config_.protocol);

  if (config_.servo.mode == ServoMode::JointSpace) {
    const IkResult ik = solve_ik(chain_, effector_start_, ik_seed(chain_));
    if (!ik.converged) {
      throw std::runtime_error("joint-space robot cannot reach the start pose");
    }
    q_start_ = ik.q;
  }

  log_.header.mode = mode_;
  log_.header.seed = config_.seed;
  log_.header.chain_checksum = chain_.checksum();
  log_.header.config = config_;
  log_.header.targets = targets_;
}

const TargetSpec* ModeRunner::current_target() const {
  if (!trial_active() || target_ >= targets_.size()) {
    return nullptr;
  }
  return &targets_[target_];
}

void ModeRunner::begin_trial(int trial) {
  if (trial < 1) {
    throw std::invalid_argument("trial indices are 1-based");
  }
  trial_ = trial;
  target_ = 0;
  trial_done_ = false;
  tracker_ = {};
  mapping_ = config_.mapping_for(mode_, trial);
  if (config_.servo.mode == ServoMode::JointSpace) {
    robot_ = make_joint_robot(chain_, q_start_, now());
  } else {
    robot_ = make_pose_robot(effector_start_, now());
  }
  result_ = {};
  result_.mode = mode_;
  result_.trial = trial;
  result_.visualization_on = mapping_.visualization_on();

  pending_.clear();
  pending_.push_back(EventKind::TrialStart);
  if (!mapping_.visualization_on()) {
    pending_.push_back(EventKind::VisualizationOff);
  }
  pending_.push_back(EventKind::TargetShown);
}

TickContext ModeRunner::next_context() const {
  TickContext ctx;
  ctx.t = now();
  ctx.trial = trial_;
  ctx.target = current_target();
  ctx.new_target =
      std::find(pending_.begin(), pending_.end(), EventKind::TargetShown) != pending_.end();
  ctx.target_shown_at = ctx.new_target ? ctx.t : shown_at_;
  return ctx;
}

const LogRecord& ModeRunner::tick(InputSource& source) { return tick(source.hand_at(next_context())); }

const LogRecord& ModeRunner::tick(const Pose& hand) {
  if (!trial_active()) {
    throw std::logic_error("tick outside an active trial");
  }
  const double t = now();
  LogRecord rec;
  rec.t = t;
  rec.trial = trial_;
  rec.target = static_cast<int>(target_);
  rec.hand = hand;
  rec.desired = mapping_.desired_pose(hand);
  rec.robot = robot_.pose;
  rec.q = robot_.q;
  rec.events = std::move(pending_);
  pending_.clear();

  const std::size_t record_index = keep_records_ ? log_.records.size() : tick_;
  if (rec.has_event(EventKind::TargetShown)) {
    shown_at_ = t;
    TargetOutcome outcome;
    outcome.index = targets_[target_].index;
    outcome.kind = targets_[target_].kind;
    outcome.shown_at = t;
    outcome.first_record = record_index;
    result_.targets.push_back(outcome);
  }

  tracker_ = update_dwell(tracker_, robot_.pose, targets_[target_], t);
  rec.inside = tracker_.inside;

  auto& outcome = result_.targets.back();
  outcome.last_record = record_index;
  if (tracker_.achieved) {
    outcome.achieved_at = t;
    rec.events.push_back(EventKind::TargetAchieved);
    advance_target(rec);
  } else if (timeouts_enabled_ && config_.target_timeout > 0.0 &&
             t - shown_at_ >= config_.target_timeout - 1e-9) {
    rec.events.push_back(EventKind::TargetTimeout);
    advance_target(rec);
  }

  robot_.t = t;
  const Pose desired = rec.desired;
  if (keep_records_) {
    log_.records.push_back(std::move(rec));
    last_ = log_.records.back();
  } else {
    last_ = std::move(rec);
  }
  if (sink_) {
    sink_(last_);
  }

  robot_ = servo_step(chain_, robot_, desired, config_.servo);
  ++tick_;
  return last_;
}

void ModeRunner::advance_target(LogRecord& rec) {
  tracker_ = {};
  ++target_;
  if (target_ >= targets_.size()) {
    rec.events.push_back(EventKind::TrialEnd);
    if (!mapping_.visualization_on()) {
      rec.events.push_back(EventKind::VisualizationOn);
    }
    trial_done_ = true;
    return;
  }
  pending_.push_back(EventKind::TargetShown);
}

TrialResult run_trial(ModeRunner& runner, int trial, InputSource& source) {
  runner.begin_trial(trial);
  source.begin_trial(trial, runner.config().hand_start);
  while (!runner.trial_done()) {
    runner.tick(source);
  }
  return runner.current_result();
}

TrialRun run_trial(const ExperimentConfig& config, MappingMode mode, int trial,
                   InputSource& source) {
  ModeRunner runner(config, mode);
  TrialRun out;
  out.result = run_trial(runner, trial, source);
  out.log = runner.take_log();
  return out;
}

std::size_t ExperimentRun::attempted() const {
  std::size_t n = 0;
  for (const auto& t : trials) {
    n += t.targets.size();
  }
  return n;
}

std::size_t ExperimentRun::achieved() const {
  std::size_t n = 0;
  for (const auto& t : trials) {
    n += t.achieved_count();
  }
  return n;
}

ExperimentRun run_experiment(const ExperimentConfig& config, const SourceFactory& factory) {
  ExperimentRun run;
  for (MappingMode mode : config.mode_order) {
    ModeRunner runner(config, mode);
    std::unique_ptr<InputSource> source =
        factory ? factory(mode)
                : std::make_unique<SyntheticOperator>(config.operator_model, config.seed);
    for (int trial = 1; trial <= config.trials_per_mode; ++trial) {
      run.trials.push_back(run_trial(runner, trial, *source));
    }
    run.logs.push_back(runner.take_log());
  }
  return run;
}

double ReplayReport::max_deviation() const {
  return std::max({max_desired_translation, max_desired_rotation, max_robot_translation,
                   max_robot_rotation, max_joint});
}

ReplayReport replay_log(const SessionLog& log) {
  ReplayReport report;
  ModeRunner runner(log.header.config, log.header.mode);
  runner.set_keep_records(false);
  const auto& records = log.records;
  std::size_t i = 0;
  while (i < records.size()) {
    const LogRecord& first = records[i];
    if (!first.has_event(EventKind::TrialStart)) {
      report.structure_matches = false;
      break;
    }
    runner.begin_trial(first.trial);
    while (i < records.size()) {
      const LogRecord& logged = records[i];
      const LogRecord& again = runner.tick(logged.hand);
      ++report.records;
      ++i;
      report.max_desired_translation =
          std::max(report.max_desired_translation, translation_distance(again.desired, logged.desired));
      report.max_desired_rotation = std::max(
          report.max_desired_rotation, rotation_distance(again.desired.rotation, logged.desired.rotation));
      report.max_robot_translation =
          std::max(report.max_robot_translation, translation_distance(again.robot, logged.robot));
      report.max_robot_rotation = std::max(
          report.max_robot_rotation, rotation_distance(again.robot.rotation, logged.robot.rotation));
      if (again.q.size() == logged.q.size() && again.q.size() > 0) {
        report.max_joint = std::max(report.max_joint, (again.q - logged.q).cwiseAbs().maxCoeff());
      } else if (again.q.size() != logged.q.size()) {
        report.structure_matches = false;
      }
      if (again.t != logged.t || again.trial != logged.trial || again.target != logged.target ||
          again.events != logged.events) {
        report.structure_matches = false;
      }
      if (runner.trial_done()) {
        break;
      }
    }
  }
  return report;
}

}  // namespace wandteleop
