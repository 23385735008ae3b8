#pragma once

// Live bridge between the session loop and browser clients.
//
// Transport: WebSocket text frames, one JSON object per frame.
//
// Server -> client, at `rate_hz`:
//   {"type":"state","version":1,"seq":12,"t":3.41,"mode":"wand","trial":2,"target":5,
//    "paused":false,"visualization_on":true,
//    "hand":{"p":[..],"q":[..]},"robot":{...},
//    "desired":{...},                      // only while visualization is on
//    "wand":{"length":0.45,"direction":[1,0,0]},  // wand mode, visualization on
//    "target_pose":{...},"target_color":"red"|"green"|"hidden"}
//   {"type":"error","message":"..."}       // reply to a rejected input frame
//
// Client -> server:
//   {"type":"input","t_client":12.5,"hand":{"p":[..],"q":[..]},"command":"start"}
//   `hand` is in the tracker frame O; `command` is optional and one of
//   start | pause | next-trial | toggle-mode. A frame needs a hand or a command.

#include <atomic>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "wandteleop/config.hpp"
#include "wandteleop/json_io.hpp"
#include "wandteleop/session_log.hpp"

namespace wandteleop {

inline constexpr int kMessageVersion = 1;

enum class ControlCommand { Start, Pause, NextTrial, ToggleMode };

std::string_view to_string(ControlCommand command);

struct InputMessage {
  double client_time = 0.0;
  std::optional<Pose> hand;  // world frame after parsing
  std::optional<ControlCommand> command;
};

// Throws std::invalid_argument on malformed frames or invalid poses.
InputMessage parse_input_message(std::string_view text, const FrameRegistry& frames);

struct StateContext {
  MappingMode mode = MappingMode::Direct;
  const ExperimentConfig* config = nullptr;
  const std::vector<TargetSpec>* targets = nullptr;
  std::uint64_t seq = 0;
  bool paused = false;
  double time_offset = 0.0;
};

// Scene state for one tick. Visualization-off trials carry neither the
// desired effector nor the wand.
json state_message(const StateContext& ctx, const LogRecord& record);

struct ServiceOptions {
  std::string bind_address = "127.0.0.1";
  unsigned short port = 8765;  // 0 picks a free port
  double rate_hz = 60.0;
  std::size_t client_queue = 8;  // per client, oldest frame dropped when full
  std::string log_out;           // directory for per-mode session logs; empty: none
  bool autostart = false;        // start the first trial without a start command
};

class WebSocketHub;

// Runs the session loop in real time on its own thread, fed by the most
// recent client hand pose. Trials pause while no client is connected.
class LiveService {
 public:
  LiveService(ExperimentConfig config, ServiceOptions options);
  ~LiveService();
  LiveService(const LiveService&) = delete;
  LiveService& operator=(const LiveService&) = delete;

  void start();
  void stop();
  unsigned short port() const;
  std::size_t client_count() const;
  std::uint64_t ticks() const { return ticks_.load(); }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::atomic<std::uint64_t> ticks_{0};
};

// Timed re-broadcast of a recorded log: record i is emitted at
// (t_i - t_0) / speed after the first. `sink` receives the state frames.
void replay_stream(const SessionLog& log, double speed,
                   const std::function<void(const std::string&)>& sink,
                   const std::atomic<bool>* cancel = nullptr);

struct StreamOutcome {
  std::size_t sent = 0;
  std::optional<std::string> error;  // set when a corrupt line halted the stream
};

// Streaming variant reading the log line by line: a corrupt line halts the
// stream, emits an error frame and reports the diagnostic.
StreamOutcome replay_stream(std::istream& in, double speed,
                            const std::function<void(const std::string&)>& sink,
                            const std::atomic<bool>* cancel = nullptr);

// Serves replay_stream of `log` to every connected client once `min_clients`
// have connected. Blocks until the stream ends.
StreamOutcome serve_replay(std::istream& log, double speed, const ServiceOptions& options,
                           std::size_t min_clients = 1,
                           const std::function<void(unsigned short)>& on_listening = {});

}  // namespace wandteleop
