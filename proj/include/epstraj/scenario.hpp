// Copyright 2026 The epstraj Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef EPSTRAJ_SCENARIO_HPP_
#define EPSTRAJ_SCENARIO_HPP_

// Scenario files and the plan -> simulate -> write pipeline behind the CLI.
//
// A scenario is a line-oriented `key = value` file; `#` starts a comment.
// `waypoint = x, y, psi` may repeat and is kept in file order. Numbers accept
// `pi` factors: `3.5`, `-pi/2`, `5pi/4`, `0.25*pi`. See README.md for the
// full key list, units and defaults.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <limits>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "epstraj/ccplanner.hpp"
#include "epstraj/csv.hpp"
#include "epstraj/epsilon_control.hpp"
#include "epstraj/errors.hpp"
#include "epstraj/simulator.hpp"

namespace epstraj {

enum class VehicleModel { kUnicycle, kBicycle };

struct Scenario {
  std::vector<Waypoint> waypoints;
  PlannerParams planner;
  double epsilon = 1.0;
  double kp = 1.0;
  double kd = 2.0;
  std::optional<GainMatrix::Matrix> gains;  // full K, overrides kp/kd
  VehicleModel vehicle = VehicleModel::kUnicycle;
  double wheelbase = 2.5;
  TrackingMode mode = TrackingMode::kEpsilonTrajectory;
  std::optional<double> duration;  // default: whole trajectory
  double offset_lateral = 0.0;
  double offset_longitudinal = 0.0;
  double offset_heading = 0.0;
  std::string output_dir = ".";
  std::vector<std::string> defaulted;  // optional keys absent from the file

  GainMatrix gain_matrix() const {
    return gains ? GainMatrix(*gains) : GainMatrix::pd(kp, kd);
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return {};
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) parts.push_back(trim(item));
  return parts;
}

// number := ['-'] factor (('*' | '/') factor)*
// factor := literal | 'pi' | literal'pi' | 'inf' | 'nan'
inline double parse_number(const std::string& text, int line) {
  const std::string s = trim(text);
  std::size_t pos = 0;
  auto fail = [&]() -> double {
    throw ParseError(line, "line " + std::to_string(line) + ": invalid number '" +
                               s + "'");
  };
  auto skip_space = [&] {
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
  };
  auto factor = [&]() -> double {
    skip_space();
    double value = 1.0;
    bool any = false;
    if (pos < s.size() && (std::isdigit(static_cast<unsigned char>(s[pos])) || s[pos] == '.')) {
      std::size_t used = 0;
      try {
        value = std::stod(s.substr(pos), &used);
      } catch (const std::exception&) {
        fail();
      }
      pos += used;
      any = true;
    }
    if (!any && (s.compare(pos, 3, "inf") == 0 || s.compare(pos, 3, "nan") == 0)) {
      value = s[pos] == 'i' ? std::numeric_limits<double>::infinity()
                            : std::numeric_limits<double>::quiet_NaN();
      pos += 3;
      return value;
    }
    if (s.compare(pos, 2, "pi") == 0) {
      value *= kPi;
      pos += 2;
      any = true;
    }
    if (!any) fail();
    return value;
  };
  skip_space();
  double sign = 1.0;
  if (pos < s.size() && (s[pos] == '-' || s[pos] == '+')) {
    if (s[pos] == '-') sign = -1.0;
    ++pos;
  }
  double value = factor();
  for (;;) {
    skip_space();
    if (pos >= s.size()) break;
    const char op = s[pos++];
    if (op == '*') {
      value *= factor();
    } else if (op == '/') {
      value /= factor();
    } else {
      fail();
    }
  }
  return sign * value;
}

}  // namespace detail

// Parses scenario text; parse_scenario() also validates.
inline Scenario parse_scenario_text(const std::string& text) {
  Scenario sc;
  std::map<std::string, std::pair<std::string, int>> scalars;
  std::vector<std::pair<std::string, int>> waypoint_lines;

  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const std::string content = detail::trim(raw.substr(0, raw.find('#')));
    if (content.empty()) continue;
    const auto eq = content.find('=');
    if (eq == std::string::npos) {
      throw ParseError(line, "line " + std::to_string(line) + ": expected 'key = value'");
    }
    const std::string key = detail::trim(content.substr(0, eq));
    const std::string value = detail::trim(content.substr(eq + 1));
    if (key == "waypoint") {
      waypoint_lines.emplace_back(value, line);
      continue;
    }
    static const char* kKeys[] = {
        "v", "kappa_max", "sigma_max", "dt", "epsilon", "kp", "kd", "gains",
        "vehicle", "wheelbase", "mode", "duration", "offset_lateral",
        "offset_longitudinal", "offset_heading", "output_dir"};
    if (std::find_if(std::begin(kKeys), std::end(kKeys),
                     [&](const char* k) { return key == k; }) == std::end(kKeys)) {
      throw ParseError(line, "line " + std::to_string(line) + ": unknown key '" + key + "'");
    }
    if (!scalars.emplace(key, std::make_pair(value, line)).second) {
      throw ParseError(line, "line " + std::to_string(line) + ": duplicate key '" + key + "'");
    }
  }

  for (std::size_t i = 0; i < waypoint_lines.size(); ++i) {
    const auto& [value, wline] = waypoint_lines[i];
    const auto parts = detail::split(value, ',');
    if (parts.size() != 3) {
      throw ParseError(wline, "line " + std::to_string(wline) +
                                  ": waypoint needs 'x, y, psi'");
    }
    sc.waypoints.push_back({detail::parse_number(parts[0], wline),
                            detail::parse_number(parts[1], wline),
                            detail::parse_number(parts[2], wline)});
  }

  auto number = [&](const char* key, double fallback, bool required) {
    auto it = scalars.find(key);
    if (it == scalars.end()) {
      if (required) throw ValidationError(key, std::string("missing required field '") + key + "'");
      sc.defaulted.emplace_back(key);
      return fallback;
    }
    return detail::parse_number(it->second.first, it->second.second);
  };
  sc.planner.v = number("v", 0.0, true);
  sc.planner.kappa_max = number("kappa_max", 0.0, true);
  sc.planner.sigma_max = number("sigma_max", 0.0, true);
  sc.planner.dt = number("dt", 0.01, false);
  sc.epsilon = number("epsilon", 1.0, false);
  sc.kp = number("kp", 1.0, false);
  sc.kd = number("kd", 2.0, false);
  sc.wheelbase = number("wheelbase", 2.5, false);
  sc.offset_lateral = number("offset_lateral", 0.0, false);
  sc.offset_longitudinal = number("offset_longitudinal", 0.0, false);
  sc.offset_heading = number("offset_heading", 0.0, false);

  if (auto it = scalars.find("gains"); it != scalars.end()) {
    auto parts = detail::split(it->second.first, ',');
    if (parts.size() != 8) {
      throw ParseError(it->second.second, "line " + std::to_string(it->second.second) +
                                              ": gains needs 8 comma-separated values "
                                              "(row-major 2x4)");
    }
    GainMatrix::Matrix k;
    for (int i = 0; i < 8; ++i) k(i / 4, i % 4) = detail::parse_number(parts[i], it->second.second);
    sc.gains = k;
  } else {
    sc.defaulted.emplace_back("gains");
  }
  if (auto it = scalars.find("duration"); it != scalars.end()) {
    sc.duration = detail::parse_number(it->second.first, it->second.second);
  } else {
    sc.defaulted.emplace_back("duration");
  }
  if (auto it = scalars.find("vehicle"); it != scalars.end()) {
    if (it->second.first == "unicycle") {
      sc.vehicle = VehicleModel::kUnicycle;
    } else if (it->second.first == "bicycle") {
      sc.vehicle = VehicleModel::kBicycle;
    } else {
      throw ParseError(it->second.second, "line " + std::to_string(it->second.second) +
                                              ": vehicle must be 'unicycle' or 'bicycle'");
    }
  } else {
    sc.defaulted.emplace_back("vehicle");
  }
  if (auto it = scalars.find("mode"); it != scalars.end()) {
    if (it->second.first == "eps") {
      sc.mode = TrackingMode::kEpsilonTrajectory;
    } else if (it->second.first == "plain") {
      sc.mode = TrackingMode::kPlain;
    } else {
      throw ParseError(it->second.second, "line " + std::to_string(it->second.second) +
                                              ": mode must be 'eps' or 'plain'");
    }
  } else {
    sc.defaulted.emplace_back("mode");
  }
  if (auto it = scalars.find("output_dir"); it != scalars.end()) {
    sc.output_dir = it->second.first;
  } else {
    sc.defaulted.emplace_back("output_dir");
  }
  return sc;
}

// Checks every module precondition up front; errors name the field.
inline void validate_scenario(const Scenario& sc) {
  if (sc.waypoints.size() < 2) {
    throw ValidationError("waypoint", "at least two waypoints are required");
  }
  for (std::size_t i = 0; i < sc.waypoints.size(); ++i) {
    const auto& w = sc.waypoints[i];
    if (!std::isfinite(w.x) || !std::isfinite(w.y) || !std::isfinite(w.psi)) {
      throw ValidationError("waypoint[" + std::to_string(i) + "]",
                            "waypoint[" + std::to_string(i) + "] has a non-finite value");
    }
  }
  auto positive = [](const char* field, double value) {
    if (!(value > 0.0) || !std::isfinite(value)) {
      throw ValidationError(field, std::string(field) + " must be positive and finite");
    }
  };
  auto finite = [](const char* field, double value) {
    if (!std::isfinite(value)) {
      throw ValidationError(field, std::string(field) + " must be finite");
    }
  };
  positive("v", sc.planner.v);
  positive("kappa_max", sc.planner.kappa_max);
  positive("sigma_max", sc.planner.sigma_max);
  positive("dt", sc.planner.dt);
  positive("epsilon", sc.epsilon);
  positive("wheelbase", sc.wheelbase);
  if (sc.duration) positive("duration", *sc.duration);
  finite("offset_lateral", sc.offset_lateral);
  finite("offset_longitudinal", sc.offset_longitudinal);
  finite("offset_heading", sc.offset_heading);
  try {
    (void)sc.gain_matrix();
  } catch (const ParamError& e) {
    throw ValidationError(sc.gains ? "gains" : "kp/kd", e.what());
  }
}

inline Scenario parse_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(0, "cannot open scenario file '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  Scenario sc = parse_scenario_text(buf.str());
  validate_scenario(sc);
  return sc;
}

// Resolved scenario in the input format; defaulted keys stay commented out so
// a rerun of the echo applies (and reports) the same defaults. The output
// directory is left out: it comes from the invocation, not the scenario.
inline void write_scenario_echo(std::ostream& out, const Scenario& sc) {
  auto is_default = [&](const std::string& key) {
    return std::find(sc.defaulted.begin(), sc.defaulted.end(), key) != sc.defaulted.end();
  };
  auto emit = [&](const std::string& key, const std::string& value) {
    out << (is_default(key) ? "# (default) " : "") << key << " = " << value << '\n';
  };
  out << "# resolved scenario\n";
  for (const auto& w : sc.waypoints) {
    out << "waypoint = " << format_number(w.x) << ", " << format_number(w.y) << ", "
        << format_number(w.psi) << '\n';
  }
  emit("v", format_number(sc.planner.v));
  emit("kappa_max", format_number(sc.planner.kappa_max));
  emit("sigma_max", format_number(sc.planner.sigma_max));
  emit("dt", format_number(sc.planner.dt));
  emit("epsilon", format_number(sc.epsilon));
  emit("kp", format_number(sc.kp));
  emit("kd", format_number(sc.kd));
  if (sc.gains) {
    std::string joined;
    for (int i = 0; i < 8; ++i) {
      joined += (i ? ", " : "") + format_number((*sc.gains)(i / 4, i % 4));
    }
    emit("gains", joined);
  }
  emit("vehicle", sc.vehicle == VehicleModel::kBicycle ? "bicycle" : "unicycle");
  emit("wheelbase", format_number(sc.wheelbase));
  emit("mode", to_string(sc.mode));
  if (sc.duration) emit("duration", format_number(*sc.duration));
  emit("offset_lateral", format_number(sc.offset_lateral));
  emit("offset_longitudinal", format_number(sc.offset_longitudinal));
  emit("offset_heading", format_number(sc.offset_heading));
}

// Initial vehicle state: on the reference at t = 0, then shifted along the
// reference normal/tangent and rotated by the scenario offsets.
inline VehicleState initial_vehicle_state(const Scenario& sc, const Reference& ref) {
  UnicycleState s = state_on_reference(ref, 0.0);
  const double c = std::cos(s.psi), sn = std::sin(s.psi);
  s.x += sc.offset_longitudinal * c - sc.offset_lateral * sn;
  s.y += sc.offset_longitudinal * sn + sc.offset_lateral * c;
  s.psi = wrap_angle(s.psi + sc.offset_heading);
  if (sc.vehicle == VehicleModel::kBicycle) return matching_bicycle(s, sc.wheelbase);
  return s;
}

struct RunOptions {
  bool plan_only = false;
  std::optional<TrackingMode> mode;
  std::optional<std::string> output_dir;
  std::optional<long> seed;  // reserved; runs are deterministic
};

struct RunResult {
  int exit_code = 0;
  std::string message;  // diagnostic on failure, names the stage
  std::vector<std::filesystem::path> written;
};

inline constexpr double kConvergedPositionError = 0.05;     // m
inline constexpr double kPlainSteadyStateTolerance = 0.01;  // relative to epsilon

inline constexpr const char* kTrajectoryFile = "trajectory.csv";
inline constexpr const char* kLogFile = "simulation.csv";
inline constexpr const char* kMetricsFile = "metrics.txt";
inline constexpr const char* kEchoFile = "scenario_echo.txt";

// Runs plan -> simulate -> write. Never throws; failures come back with a
// nonzero exit code and a message prefixed by the failing stage.
inline RunResult run_scenario(Scenario sc, const RunOptions& opts = {}) {
  RunResult result;
  if (opts.mode) {
    sc.mode = *opts.mode;
    std::erase(sc.defaulted, std::string("mode"));
  }
  if (opts.output_dir) sc.output_dir = *opts.output_dir;

  CCTrajectory traj;
  try {
    validate_scenario(sc);
    traj = connect_waypoints(sc.waypoints, sc.planner);
  } catch (const InfeasibleError& e) {
    result.exit_code = 1;
    result.message = "plan: waypoints " + std::to_string(e.from_index()) + "-" +
                     std::to_string(e.to_index()) + ": " + e.what();
    return result;
  } catch (const std::exception& e) {
    result.exit_code = 1;
    result.message = std::string("plan: ") + e.what();
    return result;
  }

  SimulationLog log;
  ConvergenceMetrics metrics;
  if (!opts.plan_only) {
    try {
      const Reference ref = trajectory_reference(traj);
      SimConfig cfg;
      cfg.initial = initial_vehicle_state(sc, ref);
      cfg.epsilon = sc.epsilon;
      cfg.gains = sc.gain_matrix();
      cfg.dt = sc.planner.dt;
      cfg.duration = sc.duration ? *sc.duration
                                 : std::floor(ref.duration / cfg.dt + 1e-9) * cfg.dt;
      cfg.mode = sc.mode;
      log = run_simulation(cfg, ref);
      metrics = convergence_metrics(log);
    } catch (const std::exception& e) {
      result.exit_code = 1;
      result.message = std::string("simulate: ") + e.what();
      return result;
    }
  }

  try {
    const std::filesystem::path dir(sc.output_dir);
    std::filesystem::create_directories(dir);
    auto open = [&](const char* name) {
      const auto path = dir / name;
      std::ofstream out(path, std::ios::binary);
      if (!out) throw Error("cannot write '" + path.string() + "'");
      result.written.push_back(path);
      return out;
    };
    {
      auto out = open(kTrajectoryFile);
      write_trajectory_csv(out, traj);
    }
    if (!opts.plan_only) {
      {
        auto out = open(kLogFile);
        write_log_csv(out, log);
      }
      {
        auto out = open(kMetricsFile);
        out << "mode=" << to_string(sc.mode) << '\n'
            << "vehicle=" << (sc.vehicle == VehicleModel::kBicycle ? "bicycle" : "unicycle")
            << '\n'
            << "epsilon=" << format_number(sc.epsilon) << '\n'
            << "trajectory_duration=" << format_number(traj.duration()) << '\n';
        std::string defaults;
        for (const auto& key : sc.defaulted) {
          if (key != "output_dir") defaults += (defaults.empty() ? "" : ",") + key;
        }
        out << "defaults_applied=" << defaults << '\n';
        write_metrics(out, metrics, sc.epsilon);
        // eps mode drives the error to zero, plain mode holds it at epsilon.
        const bool converged =
            sc.mode == TrackingMode::kEpsilonTrajectory
                ? metrics.final_err < kConvergedPositionError
                : std::abs(metrics.final_err / sc.epsilon - 1.0) < kPlainSteadyStateTolerance;
        out << "converged=" << (converged ? "true" : "false") << '\n';
      }
      {
        auto out = open(kEchoFile);
        write_scenario_echo(out, sc);
      }
    }
  } catch (const std::exception& e) {
    result.exit_code = 1;
    result.message = std::string("write: ") + e.what();
    return result;
  }
  return result;
}

}  // namespace epstraj

#endif  // EPSTRAJ_SCENARIO_HPP_
