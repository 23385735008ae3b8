#include "wandteleop/service.hpp"

#include <algorithm>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <filesystem>
#include <fstream>
#include <istream>
#include <mutex>
#include <set>
#include <thread>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include "wandteleop/session.hpp"

namespace wandteleop {

namespace beast = boost::beast;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;
using Clock = std::chrono::steady_clock;

std::string_view to_string(ControlCommand command) {
  switch (command) {
    case ControlCommand::Start:
      return "start";
    case ControlCommand::Pause:
      return "pause";
    case ControlCommand::NextTrial:
      return "next-trial";
    case ControlCommand::ToggleMode:
      return "toggle-mode";
  }
  return "start";
}

InputMessage parse_input_message(std::string_view text, const FrameRegistry& frames) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("malformed JSON: ") + e.what());
  }
  if (!j.is_object() || j.value("type", "") != "input") {
    throw std::invalid_argument("expected an object with type 'input'");
  }
  InputMessage m;
  try {
    m.client_time = j.value("t_client", 0.0);
    if (j.contains("hand")) {
      const Pose in_tracker = pose_from_json(j.at("hand"));
      m.hand = frames.contains(FrameRegistry::kTracker)
                   ? frames.to_world(FrameRegistry::kTracker, in_tracker)
                   : in_tracker;
    }
    if (j.contains("command")) {
      const auto c = j.at("command").get<std::string>();
      if (c == "start") {
        m.command = ControlCommand::Start;
      } else if (c == "pause") {
        m.command = ControlCommand::Pause;
      } else if (c == "next-trial") {
        m.command = ControlCommand::NextTrial;
      } else if (c == "toggle-mode") {
        m.command = ControlCommand::ToggleMode;
      } else {
        throw std::invalid_argument("unknown command '" + c + "'");
      }
    }
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("bad input field: ") + e.what());
  }
  if (!m.hand && !m.command) {
    throw std::invalid_argument("input needs a hand pose or a command");
  }
  return m;
}

json state_message(const StateContext& ctx, const LogRecord& r) {
  json j{{"type", "state"},
         {"version", kMessageVersion},
         {"seq", ctx.seq},
         {"t", ctx.time_offset + r.t},
         {"mode", to_string(ctx.mode)},
         {"trial", r.trial},
         {"target", r.target},
         {"paused", ctx.paused}};
  const bool visible = ctx.config == nullptr || ctx.config->visualization_on(r.trial);
  j["visualization_on"] = visible;
  j["hand"] = pose_to_json(r.hand);
  j["robot"] = pose_to_json(r.robot);
  if (visible) {
    j["desired"] = pose_to_json(r.desired);
    if (ctx.mode == MappingMode::Wand && ctx.config != nullptr) {
      j["wand"] = {{"length", ctx.config->wand.length},
                   {"direction", vec3_to_json(ctx.config->wand.direction)}};
    }
  }
  if (ctx.targets != nullptr && r.target >= 0 &&
      static_cast<std::size_t>(r.target) < ctx.targets->size()) {
    j["target_pose"] = pose_to_json((*ctx.targets)[static_cast<std::size_t>(r.target)].effector_target);
  }
  TargetColor color = r.inside ? TargetColor::Green : TargetColor::Red;
  if (r.has_event(EventKind::TargetAchieved)) {
    color = TargetColor::Hidden;
  }
  j["target_color"] = to_string(color);
  return j;
}

// ---------------------------------------------------------------------------
// WebSocket fan-out. One io thread; every session handler runs on it.

class ClientSession;

class WebSocketHub {
 public:
  using MessageHandler = std::function<void(const std::string&, const std::shared_ptr<ClientSession>&)>;
  using CountHandler = std::function<void(std::size_t)>;

  WebSocketHub(const std::string& address, unsigned short port, std::size_t queue_capacity)
      : acceptor_(ioc_), capacity_(queue_capacity) {
    const tcp::endpoint ep(net::ip::make_address(address), port);
    acceptor_.open(ep.protocol());
    acceptor_.set_option(net::socket_base::reuse_address(true));
    acceptor_.bind(ep);
    acceptor_.listen(net::socket_base::max_listen_connections);
  }

  ~WebSocketHub() { stop(); }

  void on_message(MessageHandler h) { message_handler_ = std::move(h); }
  void on_count(CountHandler h) { count_handler_ = std::move(h); }

  void start() {
    do_accept();
    thread_ = std::thread([this] { ioc_.run(); });
  }

  void stop() {
    if (stopped_.exchange(true)) {
      return;
    }
    net::post(ioc_, [this] {
      beast::error_code ec;
      acceptor_.close(ec);
    });
    ioc_.stop();
    if (thread_.joinable()) {
      thread_.join();
    }
    std::lock_guard lock(mutex_);
    sessions_.clear();
  }

  unsigned short port() const { return acceptor_.local_endpoint().port(); }

  std::size_t client_count() const {
    std::lock_guard lock(mutex_);
    return sessions_.size();
  }

  void broadcast(std::string text);

  // Called from the io thread by sessions.
  void join(const std::shared_ptr<ClientSession>& s);
  void leave(ClientSession* s);
  void dispatch(const std::string& text, const std::shared_ptr<ClientSession>& from) {
    if (message_handler_) {
      message_handler_(text, from);
    }
  }
  std::size_t capacity() const { return capacity_; }

 private:
  void do_accept();

  net::io_context ioc_{1};
  tcp::acceptor acceptor_;
  std::size_t capacity_;
  std::thread thread_;
  std::atomic<bool> stopped_{false};
  mutable std::mutex mutex_;
  std::set<std::shared_ptr<ClientSession>> sessions_;
  MessageHandler message_handler_;
  CountHandler count_handler_;
};

class ClientSession : public std::enable_shared_from_this<ClientSession> {
 public:
  ClientSession(tcp::socket&& socket, WebSocketHub& hub) : ws_(std::move(socket)), hub_(hub) {}

  void run() {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept(beast::bind_front_handler(&ClientSession::on_accept, shared_from_this()));
  }

  void send(std::shared_ptr<const std::string> text) {
    net::post(ws_.get_executor(), [self = shared_from_this(), text = std::move(text)]() mutable {
      self->enqueue(std::move(text));
    });
  }

 private:
  void on_accept(beast::error_code ec) {
    if (ec) {
      return;
    }
    hub_.join(shared_from_this());
    do_read();
  }

  void do_read() {
    ws_.async_read(buffer_, beast::bind_front_handler(&ClientSession::on_read, shared_from_this()));
  }

  void on_read(beast::error_code ec, std::size_t) {
    if (ec) {
      closed_ = true;
      hub_.leave(this);
      return;
    }
    const std::string text = beast::buffers_to_string(buffer_.data());
    buffer_.consume(buffer_.size());
    hub_.dispatch(text, shared_from_this());
    do_read();
  }

  void enqueue(std::shared_ptr<const std::string> text) {
    if (closed_) {
      return;
    }
    // Drop the oldest frame that is not in flight.
    const std::size_t first_droppable = writing_ ? 1 : 0;
    while (queue_.size() >= std::max<std::size_t>(hub_.capacity(), 1) &&
           queue_.size() > first_droppable) {
      queue_.erase(queue_.begin() + static_cast<std::ptrdiff_t>(first_droppable));
    }
    queue_.push_back(std::move(text));
    if (!writing_) {
      do_write();
    }
  }

  void do_write() {
    writing_ = true;
    ws_.text(true);
    ws_.async_write(net::buffer(*queue_.front()),
                    beast::bind_front_handler(&ClientSession::on_write, shared_from_this()));
  }

  void on_write(beast::error_code ec, std::size_t) {
    queue_.pop_front();
    if (ec) {
      writing_ = false;
      closed_ = true;
      hub_.leave(this);
      return;
    }
    if (queue_.empty()) {
      writing_ = false;
    } else {
      do_write();
    }
  }

  websocket::stream<beast::tcp_stream> ws_;
  beast::flat_buffer buffer_;
  std::deque<std::shared_ptr<const std::string>> queue_;
  WebSocketHub& hub_;
  bool writing_ = false;
  bool closed_ = false;
};

void WebSocketHub::do_accept() {
  acceptor_.async_accept(net::make_strand(ioc_), [this](beast::error_code ec, tcp::socket socket) {
    if (ec) {
      return;
    }
    std::make_shared<ClientSession>(std::move(socket), *this)->run();
    do_accept();
  });
}

void WebSocketHub::join(const std::shared_ptr<ClientSession>& s) {
  std::size_t n = 0;
  {
    std::lock_guard lock(mutex_);
    sessions_.insert(s);
    n = sessions_.size();
  }
  if (count_handler_) {
    count_handler_(n);
  }
}

void WebSocketHub::leave(ClientSession* s) {
  std::size_t n = 0;
  {
    std::lock_guard lock(mutex_);
    for (auto it = sessions_.begin(); it != sessions_.end(); ++it) {
      if (it->get() == s) {
        sessions_.erase(it);
        break;
      }
    }
    n = sessions_.size();
  }
  if (count_handler_) {
    count_handler_(n);
  }
}

void WebSocketHub::broadcast(std::string text) {
  auto shared = std::make_shared<const std::string>(std::move(text));
  std::lock_guard lock(mutex_);
  for (const auto& s : sessions_) {
    s->send(shared);
  }
}

namespace {

std::string error_frame(const std::string& message) {
  return json{{"type", "error"}, {"message", message}}.dump();
}

}  // namespace

// ---------------------------------------------------------------------------

struct LiveService::Impl {
  Impl(ExperimentConfig cfg, ServiceOptions opts, std::atomic<std::uint64_t>& ticks)
      : config(std::move(cfg)), options(std::move(opts)), tick_counter(ticks) {
    config.validate();
    if (!(options.rate_hz > 0.0)) {
      throw std::invalid_argument("broadcast rate must be positive");
    }
    hub = std::make_unique<WebSocketHub>(options.bind_address, options.port, options.client_queue);
    paused = !options.autostart;
  }

  ExperimentConfig config;
  ServiceOptions options;
  std::atomic<std::uint64_t>& tick_counter;
  std::unique_ptr<WebSocketHub> hub;

  std::mutex input_mutex;
  std::optional<Pose> latest_hand;
  std::deque<ControlCommand> commands;

  std::mutex state_mutex;
  std::string latest_state;
  std::uint64_t state_version = 0;

  std::atomic<bool> running{false};
  std::atomic<std::size_t> clients{0};
  std::thread sim_thread;
  std::thread broadcast_thread;

  // Owned by the simulation thread.
  bool paused = true;
  std::size_t mode_index = 0;
  std::unique_ptr<ModeRunner> runner;
  std::ofstream log_file;
  double time_offset = 0.0;
  std::uint64_t seq = 0;

  void open_mode(std::size_t index) {
    if (runner) {
      time_offset += runner->now();
    }
    mode_index = index % config.mode_order.size();
    runner = std::make_unique<ModeRunner>(config, config.mode_order[mode_index]);
    runner->set_timeouts_enabled(false);
    runner->set_keep_records(false);
    if (!options.log_out.empty()) {
      std::filesystem::create_directories(options.log_out);
      const auto path = std::filesystem::path(options.log_out) /
                        ("live_" + std::string(to_string(runner->mode())) + ".jsonl");
      log_file = std::ofstream(path);
      log_file << to_line(runner->log().header) << '\n';
      runner->set_record_sink([this](const LogRecord& r) { log_file << to_line(r) << '\n'; });
    }
    runner->begin_trial(1);
    latest_hand_reset();
  }

  void latest_hand_reset() {
    std::lock_guard lock(input_mutex);
    latest_hand = config.hand_start;
  }

  void next_trial() {
    const int next = runner->trial() + 1;
    if (next > config.trials_per_mode) {
      open_mode(mode_index + 1);
    } else {
      runner->begin_trial(next);
      latest_hand_reset();
    }
  }

  void apply(ControlCommand c) {
    switch (c) {
      case ControlCommand::Start:
        paused = false;
        break;
      case ControlCommand::Pause:
        paused = true;
        break;
      case ControlCommand::NextTrial:
        next_trial();
        break;
      case ControlCommand::ToggleMode:
        open_mode(mode_index + 1);
        break;
    }
  }

  void publish(const LogRecord& record) {
    StateContext ctx;
    ctx.mode = runner->mode();
    ctx.config = &config;
    ctx.targets = &runner->targets();
    ctx.seq = ++seq;
    ctx.paused = paused || clients.load() == 0;
    ctx.time_offset = time_offset;
    std::string text = state_message(ctx, record).dump();
    std::lock_guard lock(state_mutex);
    latest_state = std::move(text);
    ++state_version;
  }

  // Placeholder record describing the scene while no tick has run yet.
  LogRecord idle_record() const {
    LogRecord r;
    r.t = runner->now();
    r.trial = runner->trial();
    const TargetSpec* target = runner->current_target();
    r.target = target ? target->index : 0;
    {
      std::lock_guard lock(const_cast<std::mutex&>(input_mutex));
      r.hand = latest_hand.value_or(config.hand_start);
    }
    r.desired = runner->mapping().desired_pose(r.hand);
    r.robot = runner->robot().pose;
    r.inside = runner->tracker().inside;
    return r;
  }

  void sim_loop() {
    const auto period = std::chrono::duration_cast<Clock::duration>(
        std::chrono::duration<double>(config.servo.dt));
    auto next = Clock::now();
    while (running.load()) {
      std::deque<ControlCommand> pending;
      Pose hand;
      {
        std::lock_guard lock(input_mutex);
        pending.swap(commands);
        hand = latest_hand.value_or(config.hand_start);
      }
      for (auto c : pending) {
        apply(c);
      }
      const bool live = !paused && clients.load() > 0;
      if (live && runner->trial_active()) {
        const LogRecord& rec = runner->tick(hand);
        tick_counter.fetch_add(1);
        publish(rec);
        if (runner->trial_done()) {
          next_trial();
        }
      } else {
        publish(idle_record());
      }
      next += period;
      std::this_thread::sleep_until(next);
    }
  }

  void broadcast_loop() {
    const auto period = std::chrono::duration_cast<Clock::duration>(
        std::chrono::duration<double>(1.0 / options.rate_hz));
    auto next = Clock::now();
    std::uint64_t sent_version = 0;
    while (running.load()) {
      std::string text;
      {
        std::lock_guard lock(state_mutex);
        if (state_version != sent_version) {
          text = latest_state;
          sent_version = state_version;
        }
      }
      if (!text.empty()) {
        hub->broadcast(std::move(text));
      }
      next += period;
      std::this_thread::sleep_until(next);
    }
  }

  void on_message(const std::string& text, const std::shared_ptr<ClientSession>& from) {
    try {
      const InputMessage m = parse_input_message(text, config.frames);
      std::lock_guard lock(input_mutex);
      if (m.hand) {
        latest_hand = *m.hand;
      }
      if (m.command) {
        commands.push_back(*m.command);
      }
    } catch (const std::exception& e) {
      from->send(std::make_shared<const std::string>(error_frame(e.what())));
    }
  }
};

LiveService::LiveService(ExperimentConfig config, ServiceOptions options)
    : impl_(std::make_unique<Impl>(std::move(config), std::move(options), ticks_)) {}

LiveService::~LiveService() { stop(); }

void LiveService::start() {
  Impl& s = *impl_;
  if (s.running.exchange(true)) {
    return;
  }
  s.open_mode(0);
  s.hub->on_message([&s](const std::string& text, const std::shared_ptr<ClientSession>& from) {
    s.on_message(text, from);
  });
  s.hub->on_count([&s](std::size_t n) { s.clients.store(n); });
  s.hub->start();
  s.sim_thread = std::thread([&s] { s.sim_loop(); });
  s.broadcast_thread = std::thread([&s] { s.broadcast_loop(); });
}

void LiveService::stop() {
  if (!impl_) {
    return;
  }
  Impl& s = *impl_;
  if (!s.running.exchange(false)) {
    return;
  }
  if (s.sim_thread.joinable()) {
    s.sim_thread.join();
  }
  if (s.broadcast_thread.joinable()) {
    s.broadcast_thread.join();
  }
  s.hub->stop();
  if (s.log_file.is_open()) {
    s.log_file.flush();
  }
}

unsigned short LiveService::port() const { return impl_->hub->port(); }

std::size_t LiveService::client_count() const { return impl_->hub->client_count(); }

// ---------------------------------------------------------------------------

namespace {

class Pacer {
 public:
  explicit Pacer(double speed) : speed_(speed) {
    if (!(speed > 0.0)) {
      throw std::invalid_argument("replay speed must be positive");
    }
  }

  void wait(double t) {
    if (!started_) {
      started_ = true;
      t0_ = t;
      start_ = Clock::now();
      return;
    }
    const auto offset = std::chrono::duration<double>((t - t0_) / speed_);
    std::this_thread::sleep_until(start_ + std::chrono::duration_cast<Clock::duration>(offset));
  }

 private:
  double speed_;
  bool started_ = false;
  double t0_ = 0.0;
  Clock::time_point start_;
};

}  // namespace

void replay_stream(const SessionLog& log, double speed,
                   const std::function<void(const std::string&)>& sink,
                   const std::atomic<bool>* cancel) {
  Pacer pacer(speed);
  StateContext ctx;
  ctx.mode = log.header.mode;
  ctx.config = &log.header.config;
  ctx.targets = &log.header.targets;
  for (const auto& r : log.records) {
    if (cancel && cancel->load()) {
      return;
    }
    pacer.wait(r.t);
    ++ctx.seq;
    sink(state_message(ctx, r).dump());
  }
}

StreamOutcome replay_stream(std::istream& in, double speed,
                            const std::function<void(const std::string&)>& sink,
                            const std::atomic<bool>* cancel) {
  StreamOutcome out;
  Pacer pacer(speed);
  std::string line;
  std::size_t line_no = 0;
  std::optional<LogHeader> header;
  StateContext ctx;
  while (std::getline(in, line)) {
    ++line_no;
    if (cancel && cancel->load()) {
      break;
    }
    if (line.empty()) {
      continue;
    }
    try {
      const json j = json::parse(line);
      if (!header) {
        header = header_from_json(j);
        ctx.mode = header->mode;
        ctx.config = &header->config;
        ctx.targets = &header->targets;
        continue;
      }
      const LogRecord r = record_from_json(j);
      pacer.wait(r.t);
      ++ctx.seq;
      sink(state_message(ctx, r).dump());
      ++out.sent;
    } catch (const std::exception& e) {
      out.error = "corrupt log line " + std::to_string(line_no) + ": " + e.what();
      sink(error_frame(*out.error));
      break;
    }
  }
  if (!header && !out.error) {
    out.error = "log has no header";
    sink(error_frame(*out.error));
  }
  return out;
}

StreamOutcome serve_replay(std::istream& log, double speed, const ServiceOptions& options,
                           std::size_t min_clients,
                           const std::function<void(unsigned short)>& on_listening) {
  WebSocketHub hub(options.bind_address, options.port, options.client_queue);
  std::mutex m;
  std::condition_variable cv;
  std::size_t clients = 0;
  hub.on_count([&](std::size_t n) {
    {
      std::lock_guard lock(m);
      clients = n;
    }
    cv.notify_all();
  });
  hub.start();
  if (on_listening) {
    on_listening(hub.port());
  }
  {
    std::unique_lock lock(m);
    cv.wait(lock, [&] { return clients >= min_clients; });
  }
  const StreamOutcome out = replay_stream(log, speed, [&](const std::string& s) { hub.broadcast(s); });
  // Let queued frames drain before closing.
  std::this_thread::sleep_for(std::chrono::milliseconds(200));
  hub.stop();
  return out;
}

}  // namespace wandteleop
