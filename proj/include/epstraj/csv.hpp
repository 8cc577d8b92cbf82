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

#ifndef EPSTRAJ_CSV_HPP_
#define EPSTRAJ_CSV_HPP_

// Text outputs: trajectory CSV, simulation log CSV and the key=value metrics
// report. Numbers are printed with 17 significant digits so files round-trip
// doubles exactly and reruns are byte-identical.

#include <cstdio>
#include <ostream>
#include <string>

#include "epstraj/ccplanner.hpp"
#include "epstraj/simulator.hpp"

namespace epstraj {

inline std::string format_number(double value) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", value == 0.0 ? 0.0 : value);  // no "-0"
  return buf;
}

inline constexpr const char* kTrajectoryCsvHeader =
    "t,x,y,xd,yd,xdd,ydd,xddd,yddd,psi,kappa,sigma,segment_id";

inline constexpr const char* kLogCsvHeader =
    "t,x,y,psi,v,omega_or_phi,qe_x,qe_y,qer_x,qer_y,a,alpha_or_xi,err_pos,"
    "err_psi";

inline void write_trajectory_csv(std::ostream& out, const CCTrajectory& traj) {
  out << kTrajectoryCsvHeader << '\n';
  for (const auto& s : traj.samples()) {
    out << format_number(s.t) << ',' << format_number(s.r.x()) << ','
        << format_number(s.r.y()) << ',' << format_number(s.r_dot.x()) << ','
        << format_number(s.r_dot.y()) << ',' << format_number(s.r_ddot.x())
        << ',' << format_number(s.r_ddot.y()) << ','
        << format_number(s.r_dddot.x()) << ',' << format_number(s.r_dddot.y())
        << ',' << format_number(s.psi) << ',' << format_number(s.kappa) << ','
        << format_number(s.sigma) << ',' << s.segment_id << '\n';
  }
}

inline void write_log_csv(std::ostream& out, const SimulationLog& log) {
  out << kLogCsvHeader << '\n';
  for (const auto& r : log.records) {
    out << format_number(r.t) << ',' << format_number(r.x) << ','
        << format_number(r.y) << ',' << format_number(r.psi) << ','
        << format_number(r.v) << ',' << format_number(r.omega_or_phi) << ','
        << format_number(r.q_eps.x()) << ',' << format_number(r.q_eps.y())
        << ',' << format_number(r.q_target.x()) << ','
        << format_number(r.q_target.y()) << ',' << format_number(r.a) << ','
        << format_number(r.alpha_or_xi) << ',' << format_number(r.err_pos)
        << ',' << format_number(r.err_psi) << '\n';
  }
}

inline void write_metrics(std::ostream& out, const ConvergenceMetrics& m,
                          double epsilon) {
  auto optional_number = [](const std::optional<double>& value) {
    return value ? format_number(*value) : std::string("never");
  };
  out << "initial_err_pos=" << format_number(m.initial_err) << '\n'
      << "max_err_pos=" << format_number(m.max_err) << '\n'
      << "final_err_pos=" << format_number(m.final_err) << '\n'
      << "final_err_eps_point=" << format_number(m.final_eps_point_err) << '\n';
  static constexpr const char* kNames[3] = {"1", "0.1", "0.01"};
  for (int j = 0; j < 3; ++j) {
    out << "time_to_" << kNames[j] << "_eps=" << optional_number(m.time_to_threshold[j])
        << '\n';
  }
  out << "threshold_eps=" << format_number(epsilon) << '\n'
      << "eps_point_decay_rate=" << optional_number(m.eps_point_rate) << '\n'
      << "eps_point_converged_at=" << optional_number(m.eps_point_converged_at)
      << '\n'
      << "heading_error_monotone=" << (m.heading_monotone ? "true" : "false")
      << '\n'
      << "lyapunov_nonincreasing=" << (m.lyapunov_nonincreasing ? "true" : "false")
      << '\n';
}

}  // namespace epstraj

#endif  // EPSTRAJ_CSV_HPP_
