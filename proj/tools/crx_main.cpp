// crx: emulator, experiment runner and log analyzer for register-streamed
// joint motion. Subcommands: emu serve, run {step|sine|traj|override},
// analyze, calibrate.

#include <CLI11.hpp>
#include <json.hpp>

#include <csignal>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <thread>

#include "crx/calibrate.hpp"
#include "crx/harness.hpp"
#include "crx/io.hpp"
#include "crx/server.hpp"

namespace {

// Exit codes: 2 config/input, 3 bind, 4 handshake, 5 start-pose precondition.
constexpr int kExitConfig = 2;
constexpr int kExitBind = 3;
constexpr int kExitHandshake = 4;
constexpr int kExitPrecondition = 5;

volatile std::sig_atomic_t g_stop = 0;
void handle_signal(int) { g_stop = 1; }

struct Endpoint {
  std::string host = "127.0.0.1";
  uint16_t port = crx::kDefaultPort;
};

Endpoint parse_endpoint(const std::string& text) {
  Endpoint ep;
  const auto colon = text.rfind(':');
  if (colon == std::string::npos) {
    ep.host = text;
  } else {
    ep.host = text.substr(0, colon);
    ep.port = static_cast<uint16_t>(std::stoi(text.substr(colon + 1)));
  }
  return ep;
}

crx::EmulatorConfig load_config_or_default(const std::string& path) {
  if (path.empty()) return crx::EmulatorConfig{};
  return crx::io::load_emulator_config(path);
}

int cmd_emu_serve(const std::string& config_path, std::optional<uint16_t> port,
                  bool force_virtual, long steps, const std::string& trace_path) {
  crx::EmulatorConfig cfg;
  try {
    cfg = load_config_or_default(config_path);
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }
  // A served emulator self-ticks unless explicitly stepped.
  if (config_path.empty()) cfg.clock_mode = crx::ClockMode::kRealtime;
  if (force_virtual) cfg.clock_mode = crx::ClockMode::kVirtual;

  crx::Emulator emulator(cfg);
  if (!trace_path.empty()) emulator.start_trace(trace_path);
  crx::RegisterServer server(emulator.registers(), [&emulator] { return emulator.state(); });
  try {
    server.start(port.value_or(crx::kDefaultPort));
  } catch (const crx::BindError& e) {
    std::cerr << "bind error: " << e.what() << "\n";
    return kExitBind;
  }
  std::cout << "serving on port " << server.port() << " ("
            << (cfg.clock_mode == crx::ClockMode::kVirtual ? "virtual" : "realtime")
            << " clock)\n";

  if (cfg.clock_mode == crx::ClockMode::kVirtual) {
    if (steps > 0) {
      emulator.step(steps);
      std::cout << "advanced " << steps << " ticks, sim time " << emulator.sim_time()
                << " s\n";
      return 0;
    }
    std::cout << "virtual clock with no --steps: serving registers only\n";
  } else {
    emulator.start();
  }

  std::signal(SIGINT, handle_signal);
  std::signal(SIGTERM, handle_signal);
  while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(50));
  emulator.stop();
  server.stop();
  return 0;
}

void write_plots(const std::string& prefix, const crx::ExperimentLog& log, int joint,
                 const nlohmann::json& report) {
  crx::io::write_plot_csv(prefix + ".plot.csv", log, joint - 1);
  if (report.contains("lag")) {
    crx::io::write_aligned_plot_csv(prefix + ".aligned.csv", log, joint - 1,
                                    report.at("lag").at("tau_samples").get<long>());
  }
}

int run_and_write(const crx::ExperimentSpec& spec, const std::string& config_path,
                  bool embedded, const Endpoint& endpoint, const std::string& out_prefix,
                  bool plot) {
  crx::EmulatorConfig cfg;
  try {
    cfg = load_config_or_default(config_path);
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }

  crx::ExperimentLog log;
  try {
    if (embedded) {
      log = crx::run_embedded(cfg, spec);
    } else {
      crx::TcpLink link(endpoint.host, endpoint.port);
      log = crx::run_experiment(link, spec);
    }
  } catch (const crx::HandshakeError& e) {
    std::cerr << "handshake failed: " << e.what() << "\n";
    return kExitHandshake;
  } catch (const crx::TransportError& e) {
    std::cerr << "transport failed: " << e.what() << "\n";
    return kExitHandshake;
  } catch (const crx::StartPoseError& e) {
    std::cerr << "start-pose precondition failed: " << e.what() << "\n";
    return kExitPrecondition;
  }

  const nlohmann::json report = crx::metrics_report(spec, log);
  crx::io::write_log_csv(out_prefix + ".csv", log);
  crx::io::write_text(out_prefix + ".metrics.json", report.dump(2) + "\n");
  if (plot) write_plots(out_prefix, log, spec.joint, report);
  if (log.truncated) std::cerr << "warning: run truncated by transport loss\n";
  if (log.late_cycles > 0)
    std::cerr << "note: " << log.late_cycles << " late cycles\n";
  std::cout << report.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"register-streamed motion: emulator, experiment runner, analyzer"};
  app.require_subcommand(1);

  std::string config_path;
  std::string endpoint_text;
  if (const char* env = std::getenv("CRX_ENDPOINT")) endpoint_text = env;

  // emu serve
  auto* emu = app.add_subcommand("emu", "emulated controller");
  emu->require_subcommand(1);
  auto* serve = emu->add_subcommand("serve", "serve the register protocol");
  std::optional<uint16_t> serve_port;
  bool serve_virtual = false;
  long serve_steps = 0;
  std::string serve_trace;
  serve->add_option("--config", config_path, "emulator config JSON");
  serve->add_option("--port", serve_port, "TCP port (default 44818)");
  serve->add_flag("--virtual", serve_virtual, "force the virtual clock");
  serve->add_option("--steps", serve_steps, "advance N virtual ticks, then exit");
  serve->add_option("--trace", serve_trace, "write a per-tick state trace CSV");

  // run <kind>
  auto* run = app.add_subcommand("run", "run an experiment");
  run->require_subcommand(1);
  int joint = 1;
  double setpoint = 30.0, amplitude = 30.0, frequency = 0.1;
  double duration = 0.0, rate = 25.0;
  std::string traj_path, schedule_path, out_prefix;
  bool embedded_flag = false;
  bool plot_flag = false;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--rate", rate, "stream rate, Hz (default 25)");
    sub->add_option("--out", out_prefix, "output prefix for .csv/.metrics.json");
    sub->add_option("--config", config_path, "emulator config JSON (embedded mode)");
    sub->add_flag("--embedded", embedded_flag,
                  "run an in-process virtual-clock emulator (default unless --endpoint)");
    sub->add_option("--endpoint", endpoint_text, "controller host:port");
    sub->add_flag("--plot", plot_flag, "also write plot-ready CSV series");
  };

  auto* run_step = run->add_subcommand("step", "stream a joint step setpoint");
  run_step->add_option("--joint", joint, "axis, 1-based")->check(CLI::Range(1, 6));
  run_step->add_option("--setpoint", setpoint, "target angle, deg")->required();
  run_step->add_option("--duration", duration, "run length, s (default 5)");
  add_common(run_step);

  auto* run_sine = run->add_subcommand("sine", "stream a sinusoidal reference");
  run_sine->add_option("--joint", joint, "axis, 1-based")->check(CLI::Range(1, 6));
  run_sine->add_option("--amp", amplitude, "amplitude, deg");
  run_sine->add_option("--freq", frequency, "frequency, Hz")->required();
  run_sine->add_option("--duration", duration, "run length, s (default 30)");
  add_common(run_sine);

  auto* run_traj = run->add_subcommand("traj", "execute a trajectory file");
  run_traj->add_option("--traj", traj_path, "trajectory JSON")->required();
  run_traj->add_option("--schedule", schedule_path, "override schedule JSON");
  add_common(run_traj);

  auto* run_ovr = run->add_subcommand("override", "execute a trajectory under a schedule");
  run_ovr->add_option("--traj", traj_path, "trajectory JSON")->required();
  run_ovr->add_option("--schedule", schedule_path, "override schedule JSON")->required();
  add_common(run_ovr);

  // analyze
  auto* analyze = app.add_subcommand("analyze", "recompute metrics from a log CSV");
  std::string log_path, analyze_kind = "sine", analyze_out;
  long analyze_max_lag = 25;
  analyze->add_option("log", log_path, "log CSV path")->required();
  analyze->add_option("--kind", analyze_kind, "step|sine|traj|override");
  analyze->add_option("--joint", joint, "axis, 1-based")->check(CLI::Range(1, 6));
  analyze->add_option("--setpoint", setpoint, "step setpoint, deg");
  analyze->add_option("--amp", amplitude, "sine amplitude, deg");
  analyze->add_option("--freq", frequency, "sine frequency, Hz");
  analyze->add_option("--rate", rate, "stream rate, Hz");
  analyze->add_option("--max-lag", analyze_max_lag, "lag search window, samples");
  analyze->add_option("--out", analyze_out, "write metrics JSON here too");
  std::string analyze_plot;
  analyze->add_option("--plot", analyze_plot, "prefix for plot-ready CSV series");

  // calibrate
  auto* calib = app.add_subcommand("calibrate", "fit emulator parameters to the reference figures");
  std::string calib_out = "calibrated_config.json";
  bool calib_quick = false;
  calib->add_option("--out", calib_out, "output config path");
  calib->add_flag("--quick", calib_quick, "small grid, for smoke tests");

  CLI11_PARSE(app, argc, argv);

  try {
    if (serve->parsed()) {
      return cmd_emu_serve(config_path, serve_port, serve_virtual, serve_steps, serve_trace);
    }

    if (run->parsed()) {
      crx::ExperimentSpec spec;
      spec.joint = joint;
      spec.stream_rate = rate;
      if (run_step->parsed()) {
        spec.kind = crx::ExperimentSpec::Kind::kStep;
        spec.setpoint = setpoint;
        spec.duration = duration > 0.0 ? duration : 5.0;
        if (out_prefix.empty()) out_prefix = "run_step";
      } else if (run_sine->parsed()) {
        spec.kind = crx::ExperimentSpec::Kind::kSine;
        spec.amplitude = amplitude;
        spec.frequency = frequency;
        spec.duration = duration > 0.0 ? duration : 30.0;
        if (out_prefix.empty()) out_prefix = "run_sine";
      } else {
        spec.kind = run_ovr->parsed() ? crx::ExperimentSpec::Kind::kOverride
                                      : crx::ExperimentSpec::Kind::kTrajectory;
        spec.trajectory = crx::io::load_trajectory(traj_path);
        if (!schedule_path.empty()) {
          spec.schedule = crx::io::load_schedule(schedule_path);
          spec.has_schedule = true;
        }
        if (out_prefix.empty())
          out_prefix = run_ovr->parsed() ? "run_override" : "run_traj";
      }
      const bool use_embedded = embedded_flag || endpoint_text.empty();
      const Endpoint ep =
          endpoint_text.empty() ? Endpoint{} : parse_endpoint(endpoint_text);
      return run_and_write(spec, config_path, use_embedded, ep, out_prefix, plot_flag);
    }

    if (analyze->parsed()) {
      const crx::ExperimentLog log = crx::io::read_log_csv(log_path);
      crx::ExperimentSpec spec;
      spec.joint = joint;
      spec.stream_rate = rate;
      spec.max_lag = analyze_max_lag;
      if (analyze_kind == "step") {
        spec.kind = crx::ExperimentSpec::Kind::kStep;
        spec.setpoint = setpoint;
      } else if (analyze_kind == "sine") {
        spec.kind = crx::ExperimentSpec::Kind::kSine;
        spec.amplitude = amplitude;
        spec.frequency = frequency;
      } else if (analyze_kind == "traj" || analyze_kind == "trajectory") {
        spec.kind = crx::ExperimentSpec::Kind::kTrajectory;
      } else if (analyze_kind == "override") {
        spec.kind = crx::ExperimentSpec::Kind::kOverride;
      } else {
        std::cerr << "unknown --kind " << analyze_kind << "\n";
        return kExitConfig;
      }
      const nlohmann::json report = crx::metrics_report(spec, log);
      std::cout << report.dump(2) << "\n";
      if (!analyze_out.empty()) crx::io::write_text(analyze_out, report.dump(2) + "\n");
      if (!analyze_plot.empty()) write_plots(analyze_plot, log, spec.joint, report);
      return 0;
    }

    if (calib->parsed()) {
      const auto targets = crx::CalibrationTargets::reference();
      const auto grid =
          calib_quick ? crx::CalibrationGrid::quick() : crx::CalibrationGrid::reference();
      const crx::CalibrationResult result = crx::calibrate(targets, grid);
      nlohmann::json out = crx::io::emulator_config_json(result.best);
      out["clock_mode"] = "realtime";  // the written config is meant for emu serve
      nlohmann::json summary;
      summary["objective"] = result.objective;
      for (const auto& [key, value] : result.residuals) summary["residuals"][key] = value;
      std::cout << summary.dump(2) << "\n";
      crx::io::write_text(calib_out, out.dump(2) + "\n");
      std::cout << "wrote " << calib_out << "\n";
      return 0;
    }
  } catch (const crx::io::ParseError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const crx::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
