#pragma once

// Line-delimited session log: one header object followed by one object per
// simulation tick.
//
//   {"type":"header","schema":"wandteleop.session_log","version":1,"mode":"wand",
//    "seed":1,"chain_checksum":"...","wand":{...},"config":{...},"targets":[...]}
//   {"type":"tick","t":0.01,"trial":1,"target":0,"hand":{"p":[..],"q":[..]},
//    "desired":{...},"robot":{...},"inside":false,"events":["target_shown"]}
//
// Joint-space runs add "q": [...] to each tick.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "wandteleop/config.hpp"
#include "wandteleop/geometry.hpp"
#include "wandteleop/task.hpp"

namespace wandteleop {

inline constexpr int kLogVersion = 1;
inline constexpr std::string_view kLogSchema = "wandteleop.session_log";

enum class EventKind : std::uint8_t {
  TrialStart,
  TrialEnd,
  TargetShown,
  TargetAchieved,
  TargetTimeout,
  VisualizationOn,
  VisualizationOff,
};

std::string_view to_string(EventKind kind);
EventKind parse_event_kind(std::string_view name);

struct LogRecord {
  double t = 0.0;
  int trial = 0;   // 1-based
  int target = 0;  // 0-based index into the header's target list
  Pose hand;
  Pose desired;
  Pose robot;
  Eigen::VectorXd q;
  bool inside = false;
  std::vector<EventKind> events;

  bool has_event(EventKind kind) const;
};

struct LogHeader {
  int version = kLogVersion;
  MappingMode mode = MappingMode::Direct;
  std::uint64_t seed = 0;
  std::string chain_checksum;
  ExperimentConfig config;
  std::vector<TargetSpec> targets;
};

struct SessionLog {
  LogHeader header;
  std::vector<LogRecord> records;
};

json header_to_json(const LogHeader& header);
LogHeader header_from_json(const json& j);
json record_to_json(const LogRecord& record);
LogRecord record_from_json(const json& j);

std::string to_line(const LogHeader& header);
std::string to_line(const LogRecord& record);

void write_log(std::ostream& out, const SessionLog& log);
void write_log(const std::string& path, const SessionLog& log);
std::string log_to_string(const SessionLog& log);

// Throws std::runtime_error naming the offending line on corrupt input.
SessionLog read_log(std::istream& in);
SessionLog read_log(const std::string& path);

}  // namespace wandteleop
