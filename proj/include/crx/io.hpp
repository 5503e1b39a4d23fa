#pragma once

#include <json.hpp>
#include <stdexcept>
#include <string>

#include "crx/emulator.hpp"
#include "crx/stream.hpp"
#include "crx/trajectory.hpp"

namespace crx::io {

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Shortest decimal form that parses back to the identical double.
std::string format_double(double value);

// Emulator config file: {"kp": x|[6], "vmax": x|[6], "amax": x|[6],
//  "command_latency": s, "feedback_latency": s, "tick_rate": Hz,
//  "home_pose": [6], "clock_mode": "virtual"|"realtime"}. Missing keys keep
// their defaults.
EmulatorConfig parse_emulator_config(const nlohmann::json& j);
EmulatorConfig load_emulator_config(const std::string& path);
nlohmann::json emulator_config_json(const EmulatorConfig& config);

// Trajectory file: {"points": [{"t": s, "q": [6], "qd": [6] (optional)}...]}.
Trajectory parse_trajectory(const nlohmann::json& j);
Trajectory load_trajectory(const std::string& path);
nlohmann::json trajectory_json(const Trajectory& trajectory);

// Override schedule file: {"entries": [{"t": s, "ovr": fraction}...]}.
OverrideSchedule parse_schedule(const nlohmann::json& j);
OverrideSchedule load_schedule(const std::string& path);

// Log CSV: header t,t_cmd,cmd_j1..cmd_j6,fb_j1..fb_j6,vel_j1..vel_j6,ovr.
// Values round-trip bit-exactly.
void write_log_csv(const std::string& path, const ExperimentLog& log);
ExperimentLog read_log_csv(const std::string& path);

// Plot-ready single-joint series (t,cmd,fb,vel); `joint` is 0-based. The
// aligned variant shifts feedback/velocity left by tau samples and drops the
// tail, pairing cmd[i] with fb[i+tau].
void write_plot_csv(const std::string& path, const ExperimentLog& log, int joint);
void write_aligned_plot_csv(const std::string& path, const ExperimentLog& log, int joint,
                            long tau_samples);

nlohmann::json load_json(const std::string& path);
void write_text(const std::string& path, const std::string& text);

}  // namespace crx::io
