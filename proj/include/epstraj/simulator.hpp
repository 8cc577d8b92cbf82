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

#ifndef EPSTRAJ_SIMULATOR_HPP_
#define EPSTRAJ_SIMULATOR_HPP_

// Closed-loop simulation of a unicycle or bicycle tracking a time-indexed
// reference with the epsilon-point controller, either directly (plain mode,
// steady-state error epsilon) or through the epsilon-trajectory (zero steady
// state error). Also hosts the two-trailer model used as an independent
// heading oracle, and convergence metrics computed from logs.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <type_traits>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "epstraj/angles.hpp"
#include "epstraj/ccplanner.hpp"
#include "epstraj/epsilon_control.hpp"
#include "epstraj/errors.hpp"
#include "epstraj/flatness.hpp"
#include "epstraj/kinematics.hpp"

namespace epstraj {

// A reference trajectory addressed by time only. `evaluate_sided(t, true)`
// returns the left limit at breakpoints, where the third derivative of the
// reference may jump; analytic references ignore the flag.
struct Reference {
  std::function<TrajectoryDerivatives(double, bool)> evaluate_sided;
  double duration = 0.0;
  std::vector<double> breakpoints;

  TrajectoryDerivatives evaluate(double t) const { return evaluate_sided(t, false); }
};

inline Reference trajectory_reference(CCTrajectory traj) {
  auto shared = std::make_shared<const CCTrajectory>(std::move(traj));
  return {[shared](double t, bool from_left) { return shared->evaluate(t, from_left); },
          shared->duration(), shared->breakpoints()};
}

// Wraps a smooth function of time.
template <class Fn>
Reference analytic_reference(Fn fn, double duration) {
  return {[fn](double t, bool) { return fn(t); }, duration, {}};
}

inline Reference straight_line_reference(const Eigen::Vector2d& origin,
                                         double heading, double speed,
                                         double duration) {
  const Eigen::Vector2d dir(std::cos(heading), std::sin(heading));
  return analytic_reference(
      [=](double t) {
        TrajectoryDerivatives d;
        d.r = origin + speed * t * dir;
        d.r_dot = speed * dir;
        return d;
      },
      duration);
}

// r(t) = (speed_x t, amplitude cos(rate t)).
inline Reference cosine_reference(double speed_x, double amplitude, double rate,
                                  double duration) {
  return analytic_reference(
      [=](double t) {
        const double c = std::cos(rate * t), s = std::sin(rate * t);
        TrajectoryDerivatives d;
        d.r = {speed_x * t, amplitude * c};
        d.r_dot = {speed_x, -amplitude * rate * s};
        d.r_ddot = {0.0, -amplitude * rate * rate * c};
        d.r_dddot = {0.0, amplitude * rate * rate * rate * s};
        return d;
      },
      duration);
}

// Counterclockwise circle starting at center + (radius, 0).
inline Reference circle_reference(const Eigen::Vector2d& center, double radius,
                                  double speed, double duration) {
  const double w = speed / radius;
  return analytic_reference(
      [=](double t) {
        const double c = std::cos(w * t), s = std::sin(w * t);
        TrajectoryDerivatives d;
        d.r = center + radius * Eigen::Vector2d(c, s);
        d.r_dot = radius * w * Eigen::Vector2d(-s, c);
        d.r_ddot = -radius * w * w * Eigen::Vector2d(c, s);
        d.r_dddot = radius * w * w * w * Eigen::Vector2d(s, -c);
        return d;
      },
      duration);
}

// Unicycle state that tracks the reference perfectly at time t.
inline UnicycleState state_on_reference(const Reference& ref, double t = 0.0) {
  const TrajectoryDerivatives d = ref.evaluate(t);
  const FlatStates f = flat_states(d);
  return {d.r.x(), d.r.y(), f.psi_r, f.v_r, f.omega_r};
}

// Bicycle moving identically to `s`: phi = atan(L omega / v).
inline BicycleState matching_bicycle(const UnicycleState& s, double wheelbase) {
  if (!(s.v > 0.0)) throw DomainError("matching bicycle needs v > 0");
  return {s.x, s.y, s.psi, s.v, std::atan(wheelbase * s.omega / s.v), wheelbase};
}

enum class TrackingMode { kPlain, kEpsilonTrajectory };

inline const char* to_string(TrackingMode mode) {
  return mode == TrackingMode::kPlain ? "plain" : "eps";
}

using VehicleState = std::variant<UnicycleState, BicycleState>;

struct SimConfig {
  VehicleState initial = UnicycleState{};
  double epsilon = 1.0;
  GainMatrix gains = GainMatrix::defaults();
  double dt = 0.01;
  double duration = 1.0;
  TrackingMode mode = TrackingMode::kEpsilonTrajectory;
  double v_min = kDefaultVelocityFloor;

  void validate() const {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw ParamError("dt must be positive");
    if (!(duration > 0.0) || !std::isfinite(duration)) {
      throw ParamError("duration must be positive");
    }
    EpsilonParams check(epsilon);
    (void)check;
  }
};

struct LogRecord {
  double t = 0.0;
  double x = 0.0, y = 0.0, psi = 0.0, v = 0.0;
  double omega_or_phi = 0.0;
  Eigen::Vector2d q_eps = Eigen::Vector2d::Zero();
  Eigen::Vector2d q_target = Eigen::Vector2d::Zero();  // q_eps_r, or x_r in plain mode
  double a = 0.0;
  double alpha_or_xi = 0.0;
  double err_pos = 0.0;      // |x - x_r|
  double err_psi = 0.0;      // psi - psi_r, wrapped
  double err_eps_point = 0.0;  // |q_eps - q_target|
  double psi_r = 0.0;
  double psi_target = 0.0;   // psi_eps_r (psi_r in plain mode)
  double v_target = 0.0;     // v_eps_r (v_r in plain mode)
  double err_psi_target = 0.0;  // psi_eps_r - psi_r, wrapped
};

struct SimulationLog {
  std::vector<LogRecord> records;
  double epsilon = 0.0;
  double dt = 0.0;
  TrackingMode mode = TrackingMode::kEpsilonTrajectory;
  bool bicycle = false;
};

namespace detail {

struct Target {
  PointReference point;
  FlatStates flat;
  double psi = 0.0;
  double v = 0.0;
};

inline Target tracking_target(const TrajectoryDerivatives& d, TrackingMode mode,
                              const EpsilonParams& eps) {
  Target target;
  target.flat = flat_states(d);
  if (mode == TrackingMode::kPlain) {
    target.point = {d.r, d.r_dot, d.r_ddot};
    target.psi = target.flat.psi_r;
    target.v = target.flat.v_r;
  } else {
    const EpsilonReference er = epsilon_reference(d, target.flat, eps);
    target.point = er.point_reference();
    target.psi = er.psi_eps_r;
    target.v = er.v_eps_r;
  }
  return target;
}

template <class S>
LogRecord make_record(double t, const S& s, const typename VehicleTraits<S>::Input& u,
                      const TrajectoryDerivatives& d, const Target& target,
                      const EpsilonParams& eps) {
  const UnicycleState uni = VehicleTraits<S>::as_unicycle(s);
  LogRecord rec;
  rec.t = t;
  rec.x = s.x;
  rec.y = s.y;
  rec.psi = s.psi;
  rec.v = s.v;
  if constexpr (std::is_same_v<S, BicycleState>) {
    rec.omega_or_phi = s.phi;
    rec.alpha_or_xi = u.xi;
  } else {
    rec.omega_or_phi = s.omega;
    rec.alpha_or_xi = u.alpha;
  }
  rec.a = u.a;
  rec.q_eps = epsilon_point(uni, eps).q;
  rec.q_target = target.point.q;
  rec.err_pos = (Eigen::Vector2d(s.x, s.y) - d.r).norm();
  rec.err_psi = angle_diff(s.psi, target.flat.psi_r);
  rec.err_eps_point = (rec.q_eps - rec.q_target).norm();
  rec.psi_r = target.flat.psi_r;
  rec.psi_target = target.psi;
  rec.v_target = target.v;
  rec.err_psi_target = angle_diff(target.psi, target.flat.psi_r);
  return rec;
}

template <class S>
SimulationLog simulate(const SimConfig& cfg, const S& initial, const Reference& ref) {
  const EpsilonTracker tracker{cfg.gains, EpsilonParams(cfg.epsilon), cfg.v_min};
  const long steps = std::lround(cfg.duration / cfg.dt);
  if (static_cast<double>(steps) * cfg.dt > ref.duration + 1e-9 * cfg.dt) {
    throw ParamError("simulation duration exceeds the reference duration");
  }
  auto target_at = [&](double t, bool from_left) {
    return tracking_target(ref.evaluate_sided(t, from_left), cfg.mode, tracker.eps);
  };
  std::size_t next_break = 0;

  SimulationLog log;
  log.epsilon = cfg.epsilon;
  log.dt = cfg.dt;
  log.mode = cfg.mode;
  log.bicycle = std::is_same_v<S, BicycleState>;
  log.records.reserve(static_cast<std::size_t>(steps) + 1);

  S state = initial;
  for (long k = 0; k <= steps; ++k) {
    const double t = static_cast<double>(k) * cfg.dt;
    const TrajectoryDerivatives d = ref.evaluate(t);
    const Target target = tracking_target(d, cfg.mode, tracker.eps);
    const auto input = epsilon_tracking_input(state, target.point, tracker);
    log.records.push_back(make_record(t, state, input, d, target, tracker.eps));
    if (k == steps) break;
    // Sub-steps end on reference breakpoints; inside a sub-step the
    // reference is read from the left so a jump at its end is not seen early.
    const double t_next = static_cast<double>(k + 1) * cfg.dt;
    double t_sub = t;
    try {
      while (t_sub < t_next) {
        while (next_break < ref.breakpoints.size() &&
               ref.breakpoints[next_break] <= t_sub) {
          ++next_break;
        }
        const double t_end = next_break < ref.breakpoints.size()
                                 ? std::min(t_next, ref.breakpoints[next_break])
                                 : t_next;
        const double t_start = t_sub;
        state = epsilon_tracking_step(
                    state,
                    [&](double ts) { return target_at(ts, ts > t_start).point; },
                    t_start, tracker, t_end - t_start)
                    .state;
        t_sub = t_end;
      }
    } catch (const NumericalError& e) {
      throw NumericalError("step " + std::to_string(k) + " (t = " +
                           std::to_string(t) + "): " + e.what());
    }
  }
  return log;
}

}  // namespace detail

// Closed loop from cfg.initial over cfg.duration. The control law is
// evaluated continuously inside each integration step; inputs are logged at
// the start of each step.
inline SimulationLog run_simulation(const SimConfig& cfg, const Reference& ref) {
  cfg.validate();
  return std::visit(
      [&](const auto& initial) { return detail::simulate(cfg, initial, ref); },
      cfg.initial);
}

// Seven-state model of a vehicle at the epsilon-trajectory towing two
// trailers at hitch length epsilon: the vehicle point (psi) and the reference
// point (psi_r).
struct TwoTrailerState {
  double x_eps_r = 0.0;
  double y_eps_r = 0.0;
  double psi_eps_r = 0.0;
  double psi = 0.0;
  double psi_r = 0.0;
  double v_eps = 0.0;
  double omega_eps = 0.0;
};

template <>
struct StateTraits<TwoTrailerState> {
  static constexpr int kDim = 7;
  using Vector = Eigen::Matrix<double, kDim, 1>;
  static Vector pack(const TwoTrailerState& s) {
    Vector q;
    q << s.x_eps_r, s.y_eps_r, s.psi_eps_r, s.psi, s.psi_r, s.v_eps, s.omega_eps;
    return q;
  }
  static TwoTrailerState unpack(const Vector& q, const TwoTrailerState&) {
    return {q[0], q[1], q[2], q[3], q[4], q[5], q[6]};
  }
  static void normalize(TwoTrailerState& s) {
    s.psi_eps_r = wrap_angle(s.psi_eps_r);
    s.psi = wrap_angle(s.psi);
    s.psi_r = wrap_angle(s.psi_r);
  }
};

// Speed and yaw rate of the towing epsilon-trajectory at a given time.
struct TowingMotion {
  double v_eps = 0.0;
  double omega_eps = 0.0;
};

inline StateRate<TwoTrailerState> two_trailer_derivative(
    const TwoTrailerState& s, const TowingMotion& m, double epsilon) {
  StateRate<TwoTrailerState> rate;
  const double k = m.v_eps / epsilon;
  rate << m.v_eps * std::cos(s.psi_eps_r), m.v_eps * std::sin(s.psi_eps_r),
      m.omega_eps, k * std::sin(s.psi_eps_r - s.psi),
      k * std::sin(s.psi_eps_r - s.psi_r), 0.0, 0.0;
  return rate;
}

struct TrailerHeadings {
  double t = 0.0;
  double psi = 0.0;
  double psi_r = 0.0;
  double psi_eps_r = 0.0;
};

// Integrates the two-trailer model from `initial` at time t0, with the towing
// point's speed and yaw rate imposed by motion(t).
template <class MotionFn>
std::vector<TrailerHeadings> two_trailer_oracle(const TwoTrailerState& initial,
                                                MotionFn&& motion, double epsilon,
                                                double t0, double dt,
                                                double duration) {
  EpsilonParams check(epsilon);
  (void)check;
  if (!(dt > 0.0) || !(duration >= 0.0)) {
    throw ParamError("two-trailer oracle needs dt > 0 and duration >= 0");
  }
  const long steps = std::lround(duration / dt);
  std::vector<TrailerHeadings> out;
  out.reserve(static_cast<std::size_t>(steps) + 1);
  TwoTrailerState s = initial;
  for (long k = 0;; ++k) {
    const double t = t0 + static_cast<double>(k) * dt;
    const TowingMotion m = motion(t);
    if (!(m.v_eps > 0.0)) {
      throw DomainError("two-trailer oracle requires v_eps > 0");
    }
    s.v_eps = m.v_eps;
    s.omega_eps = m.omega_eps;
    out.push_back({t, s.psi, s.psi_r, s.psi_eps_r});
    if (k == steps) break;
    s = integrate_field_step(
        [&](const TwoTrailerState& st, double ts) {
          return two_trailer_derivative(st, motion(ts), epsilon);
        },
        s, t, dt);
  }
  return out;
}

struct ConvergenceMetrics {
  double initial_err = 0.0;
  double max_err = 0.0;
  double final_err = 0.0;
  double final_eps_point_err = 0.0;
  // Time after which |e| stays below {1, 0.1, 0.01} epsilon.
  std::optional<double> time_to_threshold[3];
  // Least-squares slope of log |q_eps - q_target| over its decay.
  std::optional<double> eps_point_rate;
  // First time |q_eps - q_target| < kConvergedEpsPoint.
  std::optional<double> eps_point_converged_at;
  bool heading_monotone = true;
  bool lyapunov_nonincreasing = true;
};

inline constexpr double kThresholdFractions[3] = {1.0, 0.1, 0.01};
inline constexpr double kConvergedEpsPoint = 1e-3;
inline constexpr double kHeadingSlack = 1e-6;
inline constexpr double kLyapunovSlack = 1e-8;

// Decay rate of a positive series: regression of log(value) on t from the
// first sample after the peak at or below half the peak, to the last sample
// above max(1e-6 peak, floor).
inline std::optional<double> exponential_fit_rate(const std::vector<double>& t,
                                                  const std::vector<double>& value,
                                                  double floor = 1e-12) {
  if (t.size() != value.size() || t.empty()) return std::nullopt;
  const auto peak_it = std::max_element(value.begin(), value.end());
  const double peak = *peak_it;
  if (!(peak > 0.0)) return std::nullopt;
  std::size_t i = static_cast<std::size_t>(std::distance(value.begin(), peak_it));
  while (i < value.size() && value[i] > 0.5 * peak) ++i;
  const double low = std::max(1e-6 * peak, floor);
  double n = 0, st = 0, sy = 0, stt = 0, sty = 0;
  for (; i < value.size() && value[i] > low; ++i) {
    const double y = std::log(value[i]);
    n += 1;
    st += t[i];
    sy += y;
    stt += t[i] * t[i];
    sty += t[i] * y;
  }
  if (n < 3) return std::nullopt;
  const double denom = n * stt - st * st;
  if (!(denom > 0.0)) return std::nullopt;
  return (n * sty - st * sy) / denom;
}

inline ConvergenceMetrics convergence_metrics(const SimulationLog& log) {
  if (log.records.empty()) throw ParamError("empty simulation log");
  const auto& recs = log.records;
  ConvergenceMetrics m;
  m.initial_err = recs.front().err_pos;
  m.final_err = recs.back().err_pos;
  m.final_eps_point_err = recs.back().err_eps_point;
  for (const auto& r : recs) m.max_err = std::max(m.max_err, r.err_pos);

  for (int j = 0; j < 3; ++j) {
    const double threshold = kThresholdFractions[j] * log.epsilon;
    std::optional<double> since;
    for (const auto& r : recs) {
      if (r.err_pos < threshold) {
        if (!since) since = r.t;
      } else {
        since.reset();
      }
    }
    m.time_to_threshold[j] = since;
  }

  std::vector<double> ts, errs;
  ts.reserve(recs.size());
  errs.reserve(recs.size());
  for (const auto& r : recs) {
    ts.push_back(r.t);
    errs.push_back(r.err_eps_point);
  }
  m.eps_point_rate = exponential_fit_rate(ts, errs);

  for (std::size_t i = 0; i < recs.size(); ++i) {
    if (!m.eps_point_converged_at) {
      if (recs[i].err_eps_point < kConvergedEpsPoint) m.eps_point_converged_at = recs[i].t;
      continue;
    }
    const auto& prev = recs[i - 1];
    const auto& cur = recs[i];
    if (std::abs(cur.err_psi) > std::abs(prev.err_psi) + kHeadingSlack) {
      m.heading_monotone = false;
    }
    if (std::abs(angle_diff(prev.psi_target, prev.psi)) < kPi / 2.0) {
      const double v_prev = 0.5 * prev.err_psi * prev.err_psi;
      const double v_cur = 0.5 * cur.err_psi * cur.err_psi;
      if (v_cur > v_prev + kLyapunovSlack) m.lyapunov_nonincreasing = false;
    }
  }
  return m;
}

}  // namespace epstraj

#endif  // EPSTRAJ_SIMULATOR_HPP_
