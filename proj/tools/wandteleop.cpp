// wandteleop: headless runs, live serving, log replay and metrics.

#include <atomic>
#include <chrono>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "wandteleop/config.hpp"
#include "wandteleop/metrics.hpp"
#include "wandteleop/service.hpp"
#include "wandteleop/session.hpp"
#include "wandteleop/statistics.hpp"

namespace fs = std::filesystem;
using namespace wandteleop;

namespace {

std::atomic<bool> g_interrupted{false};

void on_signal(int) { g_interrupted.store(true); }

ExperimentConfig make_config(const std::string& path, const std::optional<std::uint64_t>& seed,
                             const std::string& mode) {
  ExperimentConfig cfg = path.empty() ? ExperimentConfig{} : load_config(path);
  if (seed) {
    cfg.seed = *seed;
  }
  if (!mode.empty() && mode != "both") {
    cfg.mode_order = {parse_mapping_mode(mode)};
  }
  cfg.validate();
  return cfg;
}

// "host", "host:port" or ":port".
void parse_bind(const std::string& bind, ServiceOptions& opts) {
  const auto colon = bind.rfind(':');
  if (colon == std::string::npos) {
    if (!bind.empty()) {
      opts.bind_address = bind;
    }
    return;
  }
  if (colon > 0) {
    opts.bind_address = bind.substr(0, colon);
  }
  const int port = std::stoi(bind.substr(colon + 1));
  if (port < 0 || port > 65535) {
    throw std::invalid_argument("port out of range: " + bind);
  }
  opts.port = static_cast<unsigned short>(port);
}

int cmd_run(const std::string& config_path, const std::optional<std::uint64_t>& seed,
            const std::string& mode, const std::string& out_dir) {
  const ExperimentConfig cfg = make_config(config_path, seed, mode);
  const auto start = std::chrono::steady_clock::now();
  const ExperimentRun run = run_experiment(cfg);
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  fs::create_directories(out_dir);
  std::vector<TargetMetrics> rows;
  for (const auto& log : run.logs) {
    const std::string name(to_string(log.header.mode));
    write_log((fs::path(out_dir) / (name + ".jsonl")).string(), log);
    std::ofstream(fs::path(out_dir) / ("targets_" + name + ".json"))
        << targets_to_json(log.header.targets).dump(2) << '\n';
    const auto slices = extract_slices(log);
    const auto m = compute_target_metrics(slices);
    rows.insert(rows.end(), m.begin(), m.end());
  }
  std::ofstream targets_csv(fs::path(out_dir) / "targets.csv");
  write_target_csv(targets_csv, rows);
  std::ofstream summary_csv(fs::path(out_dir) / "summary.csv");
  write_summary_csv(summary_csv, summarize(rows));
  std::ofstream(fs::path(out_dir) / "config.json") << config_to_json(cfg).dump(2) << '\n';

  std::cout << "targets achieved: " << run.achieved() << "/" << run.attempted() << "\n";
  std::cout << std::fixed << std::setprecision(2) << "wall time: " << wall << " s\n";
  std::cout << "output: " << out_dir << "\n";
  return run.achieved() == run.attempted() ? 0 : 2;
}

int cmd_targets(const std::string& config_path, const std::optional<std::uint64_t>& seed,
                const std::string& mode, const std::string& out) {
  const ExperimentConfig cfg = make_config(config_path, seed, mode);
  json j = json::object();
  for (MappingMode m : cfg.mode_order) {
    j[std::string(to_string(m))] = targets_to_json(ModeRunner(cfg, m).targets());
  }
  if (out.empty() || out == "-") {
    std::cout << j.dump(2) << '\n';
  } else {
    std::ofstream(out) << j.dump(2) << '\n';
  }
  return 0;
}

int cmd_serve(const std::string& config_path, const std::optional<std::uint64_t>& seed,
              const std::string& mode, ServiceOptions opts) {
  const ExperimentConfig cfg = make_config(config_path, seed, mode);
  LiveService service(cfg, opts);
  service.start();
  std::cout << "listening on ws://" << opts.bind_address << ":" << service.port() << std::endl;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  while (!g_interrupted.load()) {
    std::this_thread::sleep_for(std::chrono::milliseconds(100));
  }
  service.stop();
  std::cout << "stopped after " << service.ticks() << " ticks" << std::endl;
  return 0;
}

int cmd_replay(const std::string& log_path, const std::string& bind, double speed) {
  if (bind.empty()) {
    const SessionLog log = read_log(log_path);
    const ReplayReport r = replay_log(log);
    std::cout << std::scientific << std::setprecision(3) << "records: " << r.records << "\n"
              << "desired: " << r.max_desired_translation << " m, " << r.max_desired_rotation
              << " rad\n"
              << "robot:   " << r.max_robot_translation << " m, " << r.max_robot_rotation
              << " rad\n"
              << "joints:  " << r.max_joint << " rad\n"
              << "structure: " << (r.structure_matches ? "match" : "MISMATCH") << "\n";
    const bool ok = r.structure_matches && r.max_deviation() <= 1e-9;
    std::cout << (ok ? "replay closure ok" : "replay closure FAILED") << "\n";
    return ok ? 0 : 1;
  }
  ServiceOptions opts;
  parse_bind(bind, opts);
  std::ifstream in(log_path);
  if (!in) {
    throw std::runtime_error("cannot open " + log_path);
  }
  const StreamOutcome out = serve_replay(in, speed, opts, 1, [&](unsigned short port) {
    std::cout << "waiting for a client on ws://" << opts.bind_address << ":" << port << std::endl;
  });
  std::cout << "sent " << out.sent << " states\n";
  if (out.error) {
    std::cerr << *out.error << "\n";
    return 1;
  }
  return 0;
}

int cmd_metrics(const std::vector<std::string>& logs, const std::string& out_dir,
                const std::string& questionnaire) {
  std::vector<TargetMetrics> rows;
  for (const auto& path : logs) {
    const SessionLog log = read_log(path);
    const auto slices = extract_slices(log);
    const auto m = compute_target_metrics(slices);
    rows.insert(rows.end(), m.begin(), m.end());
  }
  const auto summary = summarize(rows);
  if (out_dir.empty()) {
    write_summary_csv(std::cout, summary);
  } else {
    fs::create_directories(out_dir);
    std::ofstream targets_csv(fs::path(out_dir) / "targets.csv");
    write_target_csv(targets_csv, rows);
    std::ofstream summary_csv(fs::path(out_dir) / "summary.csv");
    write_summary_csv(summary_csv, summary);
  }
  if (!questionnaire.empty()) {
    std::ifstream in(questionnaire);
    if (!in) {
      throw std::runtime_error("cannot open " + questionnaire);
    }
    const auto entries = read_questionnaire_csv(in);
    std::ostringstream csv;
    csv << "question,condition_a,condition_b,n,w_plus,w_minus,p_value,exact\n";
    for (const auto& c : compare_conditions(entries)) {
      csv << c.question << ',' << c.condition_a << ',' << c.condition_b << ',' << c.result.n << ','
          << c.result.statistic << ',' << c.result.w_minus << ',' << c.result.p_value << ','
          << (c.result.exact ? "true" : "false") << '\n';
    }
    if (out_dir.empty()) {
      std::cout << csv.str();
    } else {
      std::ofstream(fs::path(out_dir) / "questionnaire.csv") << csv.str();
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Wand and direct teleoperation workbench"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string mode = "both";
  std::string out = "out";

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "Experiment config (JSON)")->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "Target generation seed (overrides config)");
    sub->add_option("--mode", mode, "direct, wand or both")
        ->check(CLI::IsMember({"direct", "wand", "both"}));
  };

  auto* run = app.add_subcommand("run", "Headless experiment with the synthetic operator");
  add_common(run);
  run->add_option("--out", out, "Output directory")->capture_default_str();

  auto* targets = app.add_subcommand("targets", "Export the generated target lists");
  add_common(targets);
  std::string targets_out = "-";
  targets->add_option("--out", targets_out, "Output file, - for stdout");

  ServiceOptions serve_opts;
  std::string bind = "127.0.0.1:8765";
  auto* serve = app.add_subcommand("serve", "Live WebSocket service");
  add_common(serve);
  serve->add_option("--bind", bind, "host:port to listen on")->capture_default_str();
  serve->add_option("--rate", serve_opts.rate_hz, "State broadcast rate in Hz")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  serve->add_option("--log-out", serve_opts.log_out, "Directory for live session logs");
  serve->add_option("--queue", serve_opts.client_queue, "Per-client frame queue capacity")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  serve->add_flag("--autostart", serve_opts.autostart, "Start without waiting for a start command");

  std::string log_path;
  std::string replay_bind;
  double speed = 1.0;
  auto* replay = app.add_subcommand("replay", "Replay closure check, or stream a log with --bind");
  replay->add_option("log", log_path, "Session log")->required()->check(CLI::ExistingFile);
  replay->add_option("--bind", replay_bind, "Stream to WebSocket clients on host:port");
  replay->add_option("--speed", speed, "Playback speed multiplier")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  std::vector<std::string> metric_logs;
  std::string metrics_out;
  std::string questionnaire;
  auto* metrics = app.add_subcommand("metrics", "Per-target and summary metrics from logs");
  metrics->add_option("logs", metric_logs, "Session logs")->required()->check(CLI::ExistingFile);
  metrics->add_option("--out", metrics_out, "Output directory (summary to stdout when absent)");
  metrics->add_option("--questionnaire", questionnaire,
                      "CSV participant,question,condition,score")
      ->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      return cmd_run(config_path, seed, mode, out);
    }
    if (*targets) {
      return cmd_targets(config_path, seed, mode, targets_out);
    }
    if (*serve) {
      parse_bind(bind, serve_opts);
      return cmd_serve(config_path, seed, mode, serve_opts);
    }
    if (*replay) {
      return cmd_replay(log_path, replay_bind, speed);
    }
    if (*metrics) {
      return cmd_metrics(metric_logs, metrics_out, questionnaire);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
