#include "wandteleop/session_log.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace wandteleop {

namespace {

constexpr std::array<std::pair<EventKind, std::string_view>, 7> kEventNames{{
    {EventKind::TrialStart, "trial_start"},
    {EventKind::TrialEnd, "trial_end"},
    {EventKind::TargetShown, "target_shown"},
    {EventKind::TargetAchieved, "target_achieved"},
    {EventKind::TargetTimeout, "target_timeout"},
    {EventKind::VisualizationOn, "visualization_on"},
    {EventKind::VisualizationOff, "visualization_off"},
}};

}  // namespace

std::string_view to_string(EventKind kind) {
  for (const auto& [k, name] : kEventNames) {
    if (k == kind) {
      return name;
    }
  }
  return "unknown";
}

EventKind parse_event_kind(std::string_view name) {
  for (const auto& [k, n] : kEventNames) {
    if (n == name) {
      return k;
    }
  }
  throw std::invalid_argument("unknown event '" + std::string(name) + "'");
}

bool LogRecord::has_event(EventKind kind) const {
  return std::find(events.begin(), events.end(), kind) != events.end();
}

json header_to_json(const LogHeader& h) {
  return json{{"type", "header"},
              {"schema", kLogSchema},
              {"version", h.version},
              {"mode", to_string(h.mode)},
              {"seed", h.seed},
              {"chain_checksum", h.chain_checksum},
              {"wand",
               {{"length", h.config.wand.length},
                {"direction", vec3_to_json(h.config.wand.direction)}}},
              {"config", config_to_json(h.config)},
              {"targets", targets_to_json(h.targets)}};
}

LogHeader header_from_json(const json& j) {
  if (j.value("type", "") != "header") {
    throw std::invalid_argument("first log line must be a header");
  }
  LogHeader h;
  h.version = j.at("version").get<int>();
  if (h.version != kLogVersion) {
    throw std::invalid_argument("unsupported log version " + std::to_string(h.version));
  }
  h.mode = parse_mapping_mode(j.at("mode").get<std::string>());
  h.seed = j.at("seed").get<std::uint64_t>();
  h.chain_checksum = j.value("chain_checksum", "");
  h.config = config_from_json(j.at("config"));
  h.targets = targets_from_json(j.at("targets"));
  return h;
}

json record_to_json(const LogRecord& r) {
  json events = json::array();
  for (auto e : r.events) {
    events.push_back(to_string(e));
  }
  json j{{"type", "tick"},
         {"t", r.t},
         {"trial", r.trial},
         {"target", r.target},
         {"hand", pose_to_json(r.hand)},
         {"desired", pose_to_json(r.desired)},
         {"robot", pose_to_json(r.robot)}};
  if (r.q.size() > 0) {
    j["q"] = std::vector<double>(r.q.data(), r.q.data() + r.q.size());
  }
  j["inside"] = r.inside;
  j["events"] = std::move(events);
  return j;
}

LogRecord record_from_json(const json& j) {
  if (j.value("type", "") != "tick") {
    throw std::invalid_argument("expected a tick record");
  }
  LogRecord r;
  r.t = j.at("t").get<double>();
  r.trial = j.at("trial").get<int>();
  r.target = j.at("target").get<int>();
  r.hand = pose_from_json(j.at("hand"));
  r.desired = pose_from_json(j.at("desired"));
  r.robot = pose_from_json(j.at("robot"));
  if (j.contains("q")) {
    const auto q = j.at("q").get<std::vector<double>>();
    r.q = Eigen::Map<const Eigen::VectorXd>(q.data(), static_cast<Eigen::Index>(q.size()));
  }
  r.inside = j.at("inside").get<bool>();
  for (const auto& e : j.at("events")) {
    r.events.push_back(parse_event_kind(e.get<std::string>()));
  }
  return r;
}

std::string to_line(const LogHeader& header) { return header_to_json(header).dump(); }
std::string to_line(const LogRecord& record) { return record_to_json(record).dump(); }

void write_log(std::ostream& out, const SessionLog& log) {
  out << to_line(log.header) << '\n';
  for (const auto& r : log.records) {
    out << to_line(r) << '\n';
  }
}

void write_log(const std::string& path, const SessionLog& log) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot write log '" + path + "'");
  }
  write_log(out, log);
}

std::string log_to_string(const SessionLog& log) {
  std::ostringstream out;
  write_log(out, log);
  return out.str();
}

SessionLog read_log(std::istream& in) {
  SessionLog log;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) {
      continue;
    }
    try {
      const json j = json::parse(line);
      if (!have_header) {
        log.header = header_from_json(j);
        have_header = true;
      } else {
        log.records.push_back(record_from_json(j));
      }
    } catch (const std::exception& e) {
      throw std::runtime_error("corrupt log line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (!have_header) {
    throw std::runtime_error("log has no header");
  }
  return log;
}

SessionLog read_log(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open log '" + path + "'");
  }
  return read_log(in);
}

}  // namespace wandteleop
