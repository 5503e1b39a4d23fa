#include "crx/io.hpp"

#include <array>
#include <charconv>
#include <cstdlib>
#include <fstream>

namespace crx::io {

namespace {

JointVec parse_joint_array(const nlohmann::json& j, const char* what) {
  if (!j.is_array() || j.size() != kNumJoints)
    throw ParseError(std::string(what) + " must be an array of " +
                     std::to_string(kNumJoints) + " numbers");
  JointVec v;
  for (int i = 0; i < kNumJoints; ++i) {
    if (!j[static_cast<size_t>(i)].is_number())
      throw ParseError(std::string(what) + " must contain numbers");
    v[i] = j[static_cast<size_t>(i)].get<double>();
  }
  return v;
}

JointVec parse_scalar_or_array(const nlohmann::json& j, const char* what) {
  if (j.is_number()) return JointVec::Constant(j.get<double>());
  return parse_joint_array(j, what);
}

double parse_number(const nlohmann::json& j, const char* what) {
  if (!j.is_number()) throw ParseError(std::string(what) + " must be a number");
  return j.get<double>();
}

}  // namespace

std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

nlohmann::json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("invalid JSON in " + path + ": " + e.what());
  }
  return j;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write " + path);
  out << text;
}

EmulatorConfig parse_emulator_config(const nlohmann::json& j) {
  if (!j.is_object()) throw ParseError("config must be a JSON object");
  EmulatorConfig cfg;
  if (j.contains("kp")) cfg.kp = parse_scalar_or_array(j.at("kp"), "kp");
  if (j.contains("vmax")) cfg.vmax = parse_scalar_or_array(j.at("vmax"), "vmax");
  if (j.contains("amax")) cfg.amax = parse_scalar_or_array(j.at("amax"), "amax");
  if (j.contains("command_latency"))
    cfg.command_latency = parse_number(j.at("command_latency"), "command_latency");
  if (j.contains("feedback_latency"))
    cfg.feedback_latency = parse_number(j.at("feedback_latency"), "feedback_latency");
  if (j.contains("tick_rate")) cfg.tick_rate = parse_number(j.at("tick_rate"), "tick_rate");
  if (j.contains("home_pose")) cfg.home_pose = parse_joint_array(j.at("home_pose"), "home_pose");
  if (j.contains("clock_mode")) {
    const auto mode = j.at("clock_mode").get<std::string>();
    if (mode == "virtual")
      cfg.clock_mode = ClockMode::kVirtual;
    else if (mode == "realtime")
      cfg.clock_mode = ClockMode::kRealtime;
    else
      throw ParseError("clock_mode must be \"virtual\" or \"realtime\"");
  }
  try {
    cfg.validate();
  } catch (const ConfigError& e) {
    throw ParseError(std::string("invalid config: ") + e.what());
  }
  return cfg;
}

EmulatorConfig load_emulator_config(const std::string& path) {
  return parse_emulator_config(load_json(path));
}

nlohmann::json emulator_config_json(const EmulatorConfig& config) {
  nlohmann::json j;
  auto joint_array = [](const JointVec& v) {
    nlohmann::json a = nlohmann::json::array();
    for (int i = 0; i < kNumJoints; ++i) a.push_back(v[i]);
    return a;
  };
  j["kp"] = joint_array(config.kp);
  j["vmax"] = joint_array(config.vmax);
  j["amax"] = joint_array(config.amax);
  j["command_latency"] = config.command_latency;
  j["feedback_latency"] = config.feedback_latency;
  j["tick_rate"] = config.tick_rate;
  j["home_pose"] = joint_array(config.home_pose);
  j["clock_mode"] = config.clock_mode == ClockMode::kVirtual ? "virtual" : "realtime";
  return j;
}

Trajectory parse_trajectory(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("points") || !j.at("points").is_array())
    throw ParseError("trajectory must be an object with a \"points\" array");
  Trajectory traj;
  bool any_qd = false;
  for (const auto& p : j.at("points")) {
    TrajectoryPoint point;
    point.t = parse_number(p.at("t"), "point t");
    point.q = parse_joint_array(p.at("q"), "point q");
    traj.points.push_back(point);
    if (p.contains("qd")) {
      any_qd = true;
      traj.velocities.push_back(parse_joint_array(p.at("qd"), "point qd"));
    } else {
      traj.velocities.push_back(JointVec::Zero());
    }
  }
  if (!any_qd) traj.velocities.clear();
  try {
    traj.validate();
  } catch (const std::invalid_argument& e) {
    throw ParseError(std::string("invalid trajectory: ") + e.what());
  }
  return traj;
}

Trajectory load_trajectory(const std::string& path) {
  return parse_trajectory(load_json(path));
}

nlohmann::json trajectory_json(const Trajectory& trajectory) {
  nlohmann::json points = nlohmann::json::array();
  for (size_t i = 0; i < trajectory.points.size(); ++i) {
    nlohmann::json p;
    p["t"] = trajectory.points[i].t;
    nlohmann::json q = nlohmann::json::array();
    for (int k = 0; k < kNumJoints; ++k) q.push_back(trajectory.points[i].q[k]);
    p["q"] = q;
    if (!trajectory.velocities.empty()) {
      nlohmann::json qd = nlohmann::json::array();
      for (int k = 0; k < kNumJoints; ++k) qd.push_back(trajectory.velocities[i][k]);
      p["qd"] = qd;
    }
    points.push_back(p);
  }
  return nlohmann::json{{"points", points}};
}

OverrideSchedule parse_schedule(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("entries") || !j.at("entries").is_array())
    throw ParseError("schedule must be an object with an \"entries\" array");
  OverrideSchedule sched;
  for (const auto& e : j.at("entries")) {
    OverrideEntry entry;
    entry.t = parse_number(e.at("t"), "entry t");
    entry.value = parse_number(e.at("ovr"), "entry ovr");
    sched.entries.push_back(entry);
  }
  try {
    sched.validate();
  } catch (const std::invalid_argument& e) {
    throw ParseError(std::string("invalid schedule: ") + e.what());
  }
  return sched;
}

OverrideSchedule load_schedule(const std::string& path) {
  return parse_schedule(load_json(path));
}

void write_log_csv(const std::string& path, const ExperimentLog& log) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write " + path);
  out << "t,t_cmd";
  for (int j = 1; j <= kNumJoints; ++j) out << ",cmd_j" << j;
  for (int j = 1; j <= kNumJoints; ++j) out << ",fb_j" << j;
  for (int j = 1; j <= kNumJoints; ++j) out << ",vel_j" << j;
  out << ",ovr\n";
  for (const auto& row : log.rows) {
    out << format_double(row.t) << ',' << format_double(row.t_cmd);
    for (int j = 0; j < kNumJoints; ++j) out << ',' << format_double(row.cmd[j]);
    for (int j = 0; j < kNumJoints; ++j) out << ',' << format_double(row.fb[j]);
    for (int j = 0; j < kNumJoints; ++j) out << ',' << format_double(row.vel[j]);
    out << ',' << format_double(row.ovr) << '\n';
  }
}

void write_plot_csv(const std::string& path, const ExperimentLog& log, int joint) {
  write_aligned_plot_csv(path, log, joint, 0);
}

void write_aligned_plot_csv(const std::string& path, const ExperimentLog& log, int joint,
                            long tau_samples) {
  if (joint < 0 || joint >= kNumJoints) throw std::invalid_argument("joint out of range");
  const long n = static_cast<long>(log.rows.size());
  if (tau_samples < 0 || tau_samples >= n)
    throw std::invalid_argument("tau_samples out of range");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write " + path);
  out << "t,cmd,fb,vel\n";
  for (long i = 0; i + tau_samples < n; ++i) {
    const auto& at = log.rows[static_cast<size_t>(i)];
    const auto& shifted = log.rows[static_cast<size_t>(i + tau_samples)];
    out << format_double(at.t) << ',' << format_double(at.cmd[joint]) << ','
        << format_double(shifted.fb[joint]) << ',' << format_double(shifted.vel[joint])
        << '\n';
  }
}

ExperimentLog read_log_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty log file " + path);

  constexpr int kColumns = 2 + 3 * kNumJoints + 1;
  ExperimentLog log;
  size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::array<double, kColumns> vals{};
    const char* p = line.c_str();
    for (int c = 0; c < kColumns; ++c) {
      char* end = nullptr;
      vals[static_cast<size_t>(c)] = std::strtod(p, &end);
      if (end == p)
        throw ParseError(path + ":" + std::to_string(line_no) + ": bad number");
      p = end;
      if (c < kColumns - 1) {
        if (*p != ',')
          throw ParseError(path + ":" + std::to_string(line_no) + ": expected comma");
        ++p;
      }
    }
    LogRow row;
    row.t = vals[0];
    row.t_cmd = vals[1];
    for (int j = 0; j < kNumJoints; ++j) row.cmd[j] = vals[static_cast<size_t>(2 + j)];
    for (int j = 0; j < kNumJoints; ++j)
      row.fb[j] = vals[static_cast<size_t>(2 + kNumJoints + j)];
    for (int j = 0; j < kNumJoints; ++j)
      row.vel[j] = vals[static_cast<size_t>(2 + 2 * kNumJoints + j)];
    row.ovr = vals[kColumns - 1];
    log.rows.push_back(row);
  }
  if (log.rows.empty()) throw ParseError("log file has no data rows: " + path);
  return log;
}

}  // namespace crx::io
