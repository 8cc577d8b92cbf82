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

#ifndef EPSTRAJ_CCPLANNER_HPP_
#define EPSTRAJ_CCPLANNER_HPP_

// Continuous-curvature trajectories (CCTrajectories) at constant speed.
//
// A trajectory is a concatenation of primitives, each generated at a fixed
// time step from the extended Dubins model:
//   * clothoid: curvature ramps linearly at +-sigma_max,
//   * arc: constant curvature, evaluated in closed form,
//   * line: zero curvature.
// A CCTurn chains clothoid-in, arc, clothoid-out. Consecutive oriented
// waypoints are joined by turn, line, turn, with the intermediate line
// direction found by a 1-D root search.
//
// Sampling: every primitive is sampled at local times 0, dt, 2 dt, ... and its
// final sample lands exactly on the primitive's end point, so the last gap of
// each primitive may be shorter than dt. When primitives are concatenated the
// joint sample belongs to the later primitive (curvature rate is
// right-continuous).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "epstraj/angles.hpp"
#include "epstraj/errors.hpp"
#include "epstraj/flatness.hpp"
#include "epstraj/kinematics.hpp"

namespace epstraj {

struct Waypoint {
  double x = 0.0;
  double y = 0.0;
  double psi = 0.0;
};

struct PlannerParams {
  double v = 1.0;          // constant speed [m/s]
  double kappa_max = 1.0;  // [1/m]
  double sigma_max = 1.0;  // dkappa/dt limit [1/(m s)]
  double dt = 0.01;        // [s]

  void validate() const {
    auto positive = [](double value, const char* name) {
      if (!(value > 0.0) || !std::isfinite(value)) {
        throw ParamError(std::string("planner parameter ") + name +
                         " must be positive and finite");
      }
    };
    positive(v, "v");
    positive(kappa_max, "kappa_max");
    positive(sigma_max, "sigma_max");
    positive(dt, "dt");
  }

  // Time to ramp curvature from 0 to kappa_max at sigma_max.
  double clothoid_duration() const { return kappa_max / sigma_max; }

  // Heading gained over that ramp, v kappa_max^2 / (2 sigma_max).
  double clothoid_heading() const {
    return v * kappa_max * kappa_max / (2.0 * sigma_max);
  }
};

enum class SegmentKind { kClothoidIn, kArc, kClothoidOut, kLine };

inline const char* to_string(SegmentKind kind) {
  switch (kind) {
    case SegmentKind::kClothoidIn:
      return "clothoid_in";
    case SegmentKind::kArc:
      return "arc";
    case SegmentKind::kClothoidOut:
      return "clothoid_out";
    case SegmentKind::kLine:
      return "line";
  }
  return "unknown";
}

struct TrajectorySample {
  double t = 0.0;
  Eigen::Vector2d r = Eigen::Vector2d::Zero();
  Eigen::Vector2d r_dot = Eigen::Vector2d::Zero();
  Eigen::Vector2d r_ddot = Eigen::Vector2d::Zero();
  Eigen::Vector2d r_dddot = Eigen::Vector2d::Zero();
  double psi = 0.0;
  double kappa = 0.0;
  double sigma = 0.0;
  int segment_id = 0;
  SegmentKind kind = SegmentKind::kLine;
};

// Position, heading and curvature at the boundary of a primitive. The heading
// is kept unwrapped so that heading changes accumulate exactly.
struct CurvedPose {
  double x = 0.0;
  double y = 0.0;
  double psi = 0.0;
  double kappa = 0.0;
};

struct TurnWaypoint {
  double t = 0.0;  // local to the turn
  double x = 0.0;
  double y = 0.0;
  double psi = 0.0;
  double kappa = 0.0;
  double sigma = 0.0;
};

struct CCTurnWaypoints {
  TurnWaypoint w_s, w_cs, w_ce, w_e;
  double delta = 0.0;  // magnitude of the heading change [rad]
  int d_c = 1;         // +1 clockwise (heading decreases), -1 counterclockwise
  double kappa_peak = 0.0;
};

struct SegmentInfo {
  SegmentKind kind = SegmentKind::kLine;
  std::size_t first = 0;  // samples [first, end) belong to this segment
  std::size_t end = 0;
  double t_start = 0.0;
  double t_end = 0.0;
  int turn = -1;  // index into CCTrajectory::turns, -1 for lines
};

struct PlannedTurn {
  CCTurnWaypoints waypoints;
  double t_start = 0.0;  // global
  double t_end = 0.0;
};

class CCTrajectory;
TrajectoryDerivatives sample_derivatives(const TrajectorySample& s, double v);

namespace detail {

inline constexpr double kTimeTol = 1e-9;  // fraction of dt

inline TrajectorySample make_sample(double t, double x, double y, double psi,
                                    double kappa, double sigma,
                                    SegmentKind kind) {
  TrajectorySample s;
  s.t = t;
  s.r = Eigen::Vector2d(x, y);
  s.psi = wrap_angle(psi);
  s.kappa = kappa;
  s.sigma = sigma;
  s.kind = kind;
  return s;
}

// Local sample times 0, dt, 2 dt, ... strictly before `duration` (within
// tolerance), followed by `duration` itself.
template <class Visit>
void for_each_sample_time(double duration, double dt, Visit&& visit) {
  const double cutoff = duration - kTimeTol * dt;
  for (long k = 0;; ++k) {
    const double t = static_cast<double>(k) * dt;
    if (!(t < cutoff)) break;
    visit(t, false);
  }
  visit(duration, true);
}

// Integrates the extended Dubins model at constant sigma for `duration`,
// calling sink(t, pose) at every sample time. Returns the end pose with
// heading and curvature snapped to their closed-form values.
template <class Sink>
CurvedPose integrate_clothoid(const CurvedPose& start, double sigma,
                              double duration, const PlannerParams& p,
                              Sink&& sink) {
  ExtendedDubinsState state{start.x, start.y, start.psi, start.kappa, p.v};
  double t_prev = 0.0;
  CurvedPose end;
  for_each_sample_time(duration, p.dt, [&](double t, bool last) {
    if (t > t_prev) {
      state = integrate_step(extended_dubins_derivative, state,
                             ExtendedDubinsInput{sigma}, t - t_prev);
      t_prev = t;
    }
    CurvedPose pose{state.x, state.y,
                    start.psi + p.v * (start.kappa * t + 0.5 * sigma * t * t),
                    start.kappa + sigma * t};
    if (last) end = pose;
    sink(t, pose);
  });
  return end;
}

// Constant-curvature arc sweeping `sweep` radians of heading; the curvature
// sign is -d_c. Positions come from the circle about the rotation center.
template <class Sink>
CurvedPose sweep_arc(const CurvedPose& start, double kappa_abs, double sweep,
                     int d_c, const PlannerParams& p, Sink&& sink) {
  const double kappa = -static_cast<double>(d_c) * kappa_abs;
  const double radius = 1.0 / kappa_abs;
  const double cx = start.x - std::sin(start.psi) / kappa;
  const double cy = start.y + std::cos(start.psi) / kappa;
  // Angle of the center-to-vehicle ray; heading = psi_c - d_c pi/2.
  const double psi_c0 = start.psi + d_c * kPi / 2.0;
  const double duration = sweep / (p.v * kappa_abs);
  CurvedPose end;
  for_each_sample_time(duration, p.dt, [&](double t, bool last) {
    const double psi_c = psi_c0 + kappa * p.v * t;
    CurvedPose pose{cx + radius * std::cos(psi_c), cy + radius * std::sin(psi_c),
                    psi_c - d_c * kPi / 2.0, kappa};
    if (last) end = pose;
    sink(t, pose);
  });
  return end;
}

struct TurnPlan {
  double kappa_peak = 0.0;
  double ramp_duration = 0.0;
  double arc_sweep = 0.0;
  double duration = 0.0;
};

inline constexpr double kMinRampDuration = 1e-12;

inline TurnPlan plan_turn(double delta, const PlannerParams& p) {
  TurnPlan plan;
  if (delta == 0.0) return plan;
  if (delta >= 2.0 * p.clothoid_heading()) {
    plan.kappa_peak = p.kappa_max;
    plan.arc_sweep = delta - 2.0 * p.clothoid_heading();
  } else {
    // Symmetric clothoid pair with a reduced peak: v k^2 / sigma = delta.
    plan.kappa_peak = std::min(p.kappa_max, std::sqrt(delta * p.sigma_max / p.v));
  }
  plan.ramp_duration = plan.kappa_peak / p.sigma_max;
  if (!(plan.ramp_duration >= kMinRampDuration)) {
    throw TurnTooTight("heading change " + std::to_string(delta) +
                       " rad is too small to realize with sigma_max");
  }
  plan.duration = 2.0 * plan.ramp_duration + plan.arc_sweep / (p.v * plan.kappa_peak);
  return plan;
}

// Runs the three stages of a CCTurn. sink(t_local, pose, sigma, kind, stage_end)
template <class Sink>
CCTurnWaypoints run_cc_turn(const CurvedPose& entry, double delta, int d_c,
                            const PlannerParams& p, Sink&& sink) {
  const TurnPlan plan = plan_turn(delta, p);
  const double sign = -static_cast<double>(d_c);
  const double sigma_in = sign * p.sigma_max;
  CCTurnWaypoints wps;
  wps.delta = delta;
  wps.d_c = d_c;
  wps.kappa_peak = plan.kappa_peak;
  auto to_wp = [](double t, const CurvedPose& pose, double sigma) {
    return TurnWaypoint{t, pose.x, pose.y, pose.psi, pose.kappa, sigma};
  };
  wps.w_s = to_wp(0.0, entry, sigma_in);
  if (delta == 0.0) {
    wps.w_cs = wps.w_ce = wps.w_e = wps.w_s;
    return wps;
  }

  double offset = 0.0;
  const CurvedPose cs = integrate_clothoid(
      entry, sigma_in, plan.ramp_duration, p, [&](double t, const CurvedPose& pose) {
        sink(offset + t, pose, sigma_in, SegmentKind::kClothoidIn);
      });
  offset += plan.ramp_duration;
  wps.w_cs = to_wp(offset, cs, 0.0);

  CurvedPose ce = cs;
  if (plan.arc_sweep > 0.0) {
    ce = sweep_arc(cs, plan.kappa_peak, plan.arc_sweep, d_c, p,
                   [&](double t, const CurvedPose& pose) {
                     sink(offset + t, pose, 0.0, SegmentKind::kArc);
                   });
    // Closed-form heading from the turn entry.
    ce.psi = cs.psi + sign * plan.arc_sweep;
    offset += plan.arc_sweep / (p.v * plan.kappa_peak);
  }
  wps.w_ce = to_wp(offset, ce, -sigma_in);

  CurvedPose e = integrate_clothoid(
      ce, -sigma_in, plan.ramp_duration, p, [&](double t, const CurvedPose& pose) {
        sink(offset + t, pose, -sigma_in, SegmentKind::kClothoidOut);
      });
  offset += plan.ramp_duration;
  e.psi = entry.psi + sign * delta;
  e.kappa = 0.0;
  wps.w_e = to_wp(offset, e, 0.0);
  return wps;
}

}  // namespace detail

// Clothoid from `start` to curvature `target_kappa` at the maximum rate.
inline std::vector<TrajectorySample> clothoid_segment(
    const CurvedPose& start, double target_kappa, const PlannerParams& p) {
  p.validate();
  const double limit = p.kappa_max * (1.0 + 1e-12);
  if (!(std::abs(start.kappa) <= limit) || !(std::abs(target_kappa) <= limit)) {
    throw ParamError("clothoid curvature exceeds kappa_max");
  }
  std::vector<TrajectorySample> out;
  const double change = target_kappa - start.kappa;
  if (change == 0.0) return out;
  const double sigma = change > 0.0 ? p.sigma_max : -p.sigma_max;
  const SegmentKind kind = std::abs(target_kappa) > std::abs(start.kappa)
                               ? SegmentKind::kClothoidIn
                               : SegmentKind::kClothoidOut;
  detail::integrate_clothoid(
      start, sigma, std::abs(change) / p.sigma_max, p,
      [&](double t, const CurvedPose& pose) {
        out.push_back(detail::make_sample(t, pose.x, pose.y, pose.psi,
                                          pose.kappa, sigma, kind));
      });
  out.back().kappa = target_kappa;
  return out;
}

// Circular arc at |kappa| = kappa_max sweeping `heading_to_sweep` radians,
// turning clockwise for d_c = +1 and counterclockwise for d_c = -1.
inline std::vector<TrajectorySample> arc_segment(const CurvedPose& start,
                                                 double heading_to_sweep,
                                                 const PlannerParams& p,
                                                 int d_c) {
  p.validate();
  if (!(heading_to_sweep >= 0.0) || !std::isfinite(heading_to_sweep)) {
    throw ParamError("arc sweep must be a non-negative finite angle");
  }
  if (d_c != 1 && d_c != -1) throw ParamError("d_c must be +1 or -1");
  std::vector<TrajectorySample> out;
  if (heading_to_sweep == 0.0) return out;
  detail::sweep_arc(start, p.kappa_max, heading_to_sweep, d_c, p,
                    [&](double t, const CurvedPose& pose) {
                      out.push_back(detail::make_sample(
                          t, pose.x, pose.y, pose.psi, pose.kappa, 0.0,
                          SegmentKind::kArc));
                    });
  return out;
}

inline std::vector<TrajectorySample> line_segment(const Eigen::Vector2d& p1,
                                                  const Eigen::Vector2d& p2,
                                                  const PlannerParams& p) {
  p.validate();
  const Eigen::Vector2d diff = p2 - p1;
  const double length = diff.norm();
  if (!(length > 0.0)) throw ParamError("line segment endpoints coincide");
  const double psi = std::atan2(diff.y(), diff.x());
  const double duration = length / p.v;
  std::vector<TrajectorySample> out;
  detail::for_each_sample_time(duration, p.dt, [&](double t, bool last) {
    const Eigen::Vector2d r = last ? p2 : Eigen::Vector2d(p1 + diff * (t / duration));
    out.push_back(
        detail::make_sample(t, r.x(), r.y(), psi, 0.0, 0.0, SegmentKind::kLine));
  });
  return out;
}

struct CCTurnResult {
  CCTurnWaypoints waypoints;
  std::vector<TrajectorySample> samples;
};

// CCTurn of heading change `delta` (>= 0) in direction d_c starting from a
// zero-curvature pose. Turns below 2 psi_cs use a clothoid pair whose peak
// curvature is reduced so the turn still closes exactly.
inline CCTurnResult cc_turn(const Waypoint& entry, double delta, int d_c,
                            const PlannerParams& p) {
  p.validate();
  if (!(delta >= 0.0) || !std::isfinite(delta)) {
    throw ParamError("turn heading change must be a non-negative finite angle");
  }
  if (d_c != 1 && d_c != -1) throw ParamError("d_c must be +1 or -1");
  CCTurnResult result;
  SegmentKind previous = SegmentKind::kLine;
  result.waypoints = detail::run_cc_turn(
      CurvedPose{entry.x, entry.y, entry.psi, 0.0}, delta, d_c, p,
      [&](double t, const CurvedPose& pose, double sigma, SegmentKind kind) {
        // Stage start duplicates the previous stage's end: keep the later one.
        if (!result.samples.empty() && kind != previous) result.samples.pop_back();
        previous = kind;
        result.samples.push_back(
            detail::make_sample(t, pose.x, pose.y, pose.psi, pose.kappa, sigma, kind));
      });
  if (!result.samples.empty()) {
    auto& last = result.samples.back();
    const auto& w_e = result.waypoints.w_e;
    last.psi = wrap_angle(w_e.psi);
    last.kappa = 0.0;
  }
  return result;
}

// r_dot = v [cos, sin], r_ddot = v^2 kappa [-sin, cos],
// r_dddot = v^2 sigma [-sin, cos] - v^3 kappa^2 [cos, sin].
inline TrajectoryDerivatives sample_derivatives(const TrajectorySample& s,
                                                double v) {
  const double c = std::cos(s.psi);
  const double sn = std::sin(s.psi);
  TrajectoryDerivatives d;
  d.r = s.r;
  d.r_dot = v * Eigen::Vector2d(c, sn);
  d.r_ddot = v * v * s.kappa * Eigen::Vector2d(-sn, c);
  d.r_dddot = v * v * s.sigma * Eigen::Vector2d(-sn, c) -
              v * v * v * s.kappa * s.kappa * Eigen::Vector2d(c, sn);
  return d;
}

class CCTrajectory {
 public:
  CCTrajectory() = default;
  CCTrajectory(PlannerParams params, std::vector<TrajectorySample> samples,
               std::vector<SegmentInfo> segments, std::vector<PlannedTurn> turns)
      : params_(params),
        samples_(std::move(samples)),
        segments_(std::move(segments)),
        turns_(std::move(turns)) {}

  const PlannerParams& params() const { return params_; }
  const std::vector<TrajectorySample>& samples() const { return samples_; }
  const std::vector<SegmentInfo>& segments() const { return segments_; }
  const std::vector<PlannedTurn>& turns() const { return turns_; }
  std::vector<TrajectorySample>& mutable_samples() { return samples_; }

  bool empty() const { return samples_.empty(); }
  double duration() const { return samples_.empty() ? 0.0 : samples_.back().t; }

  // Index of the last sample at or before t.
  std::size_t index_at(double t) const {
    auto it = std::upper_bound(
        samples_.begin(), samples_.end(), t,
        [](double value, const TrajectorySample& s) { return value < s.t; });
    if (it == samples_.begin()) return 0;
    return static_cast<std::size_t>(std::distance(samples_.begin(), it) - 1);
  }

  // Index of the last sample strictly before t (0 if none).
  std::size_t index_before(double t) const {
    auto it = std::lower_bound(
        samples_.begin(), samples_.end(), t,
        [](const TrajectorySample& s, double value) { return s.t < value; });
    if (it == samples_.begin()) return 0;
    return static_cast<std::size_t>(std::distance(samples_.begin(), it) - 1);
  }

  // Segment start times after the first; the curvature rate jumps there.
  std::vector<double> breakpoints() const {
    std::vector<double> out;
    for (std::size_t i = 1; i < segments_.size(); ++i) {
      out.push_back(samples_[segments_[i].first].t);
    }
    return out;
  }

  // Reference at time t: the sample at or before t advanced by the extended
  // Dubins model with that sample's curvature rate. At sample times this is
  // exactly the stored sample. With `from_left` the sample strictly before t
  // is advanced instead, giving the left limit at segment joints.
  TrajectoryDerivatives evaluate(double t, bool from_left = false) const {
    if (samples_.empty()) throw ParamError("empty trajectory");
    const double tol = detail::kTimeTol * params_.dt;
    if (t < samples_.front().t - tol || t > duration() + tol) {
      throw ParamError("trajectory evaluated outside [0, " +
                       std::to_string(duration()) + "] at t = " +
                       std::to_string(t));
    }
    const TrajectorySample& base =
        samples_[from_left ? index_before(t) : index_at(t)];
    const double tau = t - base.t;
    if (!(tau > 0.0)) return sample_derivatives(base, params_.v);
    ExtendedDubinsState s{base.r.x(), base.r.y(), base.psi, base.kappa,
                          params_.v};
    s = integrate_step(extended_dubins_derivative, s,
                       ExtendedDubinsInput{base.sigma}, tau);
    TrajectorySample advanced = base;
    advanced.r = Eigen::Vector2d(s.x, s.y);
    advanced.psi = base.psi + params_.v * (base.kappa * tau + 0.5 * base.sigma * tau * tau);
    advanced.kappa = base.kappa + base.sigma * tau;
    return sample_derivatives(advanced, params_.v);
  }

 private:
  PlannerParams params_;
  std::vector<TrajectorySample> samples_;
  std::vector<SegmentInfo> segments_;
  std::vector<PlannedTurn> turns_;
};

// Fills r_dot, r_ddot and r_dddot of every sample from (psi, kappa, sigma, v).
inline CCTrajectory annotate_derivatives(CCTrajectory traj) {
  const double v = traj.params().v;
  for (auto& s : traj.mutable_samples()) {
    const TrajectoryDerivatives d = sample_derivatives(s, v);
    s.r_dot = d.r_dot;
    s.r_ddot = d.r_ddot;
    s.r_dddot = d.r_dddot;
  }
  return traj;
}

namespace detail {

// Displacement of a CCTurn started at the origin with heading 0.
inline Eigen::Vector2d turn_displacement(double delta, int d_c,
                                         const PlannerParams& p) {
  if (delta == 0.0) return Eigen::Vector2d::Zero();
  const CCTurnWaypoints wps = run_cc_turn(
      CurvedPose{}, delta, d_c, p,
      [](double, const CurvedPose&, double, SegmentKind) {});
  return {wps.w_e.x, wps.w_e.y};
}

inline Eigen::Vector2d rotate(const Eigen::Vector2d& v, double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  return {c * v.x() - s * v.y(), s * v.x() + c * v.y()};
}

// Displacement over [0, duration] of a clothoid with heading
// psi0 + v (kappa0 t + sigma t^2 / 2), by composite Gauss-Legendre quadrature.
inline Eigen::Vector2d clothoid_displacement(double psi0, double kappa0,
                                             double sigma, double duration,
                                             double v) {
  static constexpr double kNodes[4] = {0.1834346424956498, 0.5255324099163290,
                                       0.7966664774136267, 0.9602898564975363};
  static constexpr double kWeights[4] = {0.3626837833783620, 0.3137066458778873,
                                         0.2223810344533745, 0.1012285362903763};
  constexpr int kPanels = 24;
  const double h = duration / kPanels;
  Eigen::Vector2d sum = Eigen::Vector2d::Zero();
  for (int panel = 0; panel < kPanels; ++panel) {
    const double mid = (panel + 0.5) * h;
    for (int i = 0; i < 4; ++i) {
      for (double side : {-1.0, 1.0}) {
        const double t = mid + side * 0.5 * h * kNodes[i];
        const double psi = psi0 + v * (kappa0 * t + 0.5 * sigma * t * t);
        sum += kWeights[i] * Eigen::Vector2d(std::cos(psi), std::sin(psi));
      }
    }
  }
  return 0.5 * h * v * sum;
}

// Quadrature counterpart of turn_displacement, used to scan for leg roots.
inline Eigen::Vector2d turn_displacement_fast(double delta, int d_c,
                                              const PlannerParams& p) {
  if (delta == 0.0) return Eigen::Vector2d::Zero();
  const TurnPlan plan = plan_turn(delta, p);
  const double sign = -static_cast<double>(d_c);
  const double sigma = sign * p.sigma_max;
  const double kappa = sign * plan.kappa_peak;
  Eigen::Vector2d pos = clothoid_displacement(0.0, 0.0, sigma, plan.ramp_duration, p.v);
  const double psi_cs = sign * p.v * plan.kappa_peak * plan.kappa_peak / (2.0 * p.sigma_max);
  const double psi_ce = psi_cs + sign * plan.arc_sweep;
  if (plan.arc_sweep > 0.0) {
    pos += Eigen::Vector2d(std::sin(psi_ce) - std::sin(psi_cs),
                           std::cos(psi_cs) - std::cos(psi_ce)) / kappa;
  }
  pos += clothoid_displacement(psi_ce, kappa, -sigma, plan.ramp_duration, p.v);
  return pos;
}

// Heading change needed to go from `from` to `to` turning in direction d_c,
// in [0, 2 pi).
inline double turn_amount(double from, double to, int d_c) {
  double change = std::fmod(-static_cast<double>(d_c) * (to - from), kTwoPi);
  if (change < 0.0) change += kTwoPi;
  if (change >= kTwoPi) change = 0.0;
  return change;
}

struct LegSolution {
  double delta1 = 0.0;
  int d1 = 1;
  double delta2 = 0.0;
  int d2 = 1;
  double heading = 0.0;  // direction of the connecting line
  double length = 0.0;   // connecting line length
  double duration = 0.0;
};

inline constexpr int kLegScanPoints = 192;
inline constexpr double kLegResidualTol = 1e-9;
// Connecting lines shorter than this are dropped.
inline constexpr double kLegLineMin = 1e-9;

struct LegResidual {
  double cross = 0.0;  // component of the gap normal to the line
  double along = 0.0;  // line length
  double heading = 0.0;
  double delta2 = 0.0;
};

inline LegResidual leg_residual(const Waypoint& a, const Waypoint& b,
                                double delta1, int d1, int d2,
                                const PlannerParams& p, bool exact) {
  LegResidual res;
  res.heading = a.psi - d1 * delta1;
  res.delta2 = turn_amount(res.heading, b.psi, d2);
  auto displacement = [&](double delta, int d_c) {
    return exact ? turn_displacement(delta, d_c, p)
                 : turn_displacement_fast(delta, d_c, p);
  };
  const Eigen::Vector2d d_first = rotate(displacement(delta1, d1), a.psi);
  const Eigen::Vector2d d_second = rotate(displacement(res.delta2, d2), res.heading);
  const Eigen::Vector2d gap =
      Eigen::Vector2d(b.x - a.x, b.y - a.y) - d_first - d_second;
  const double c = std::cos(res.heading), s = std::sin(res.heading);
  res.cross = c * gap.y() - s * gap.x();
  res.along = c * gap.x() + s * gap.y();
  return res;
}

inline double turn_duration(double delta, const PlannerParams& p) {
  return delta == 0.0 ? 0.0 : plan_turn(delta, p).duration;
}

// Turn-line-turn connection of two oriented waypoints with the shortest
// duration, or nothing if no connection exists.
inline std::optional<LegSolution> solve_leg(const Waypoint& a,
                                            const Waypoint& b,
                                            const PlannerParams& p) {
  std::optional<LegSolution> best;
  const double scale = std::max(1.0, std::hypot(b.x - a.x, b.y - a.y));
  auto consider = [&](double delta1, int d1, int d2) {
    const LegResidual res = leg_residual(a, b, delta1, d1, d2, p, true);
    if (std::abs(res.cross) > kLegResidualTol * scale) return;
    if (res.along < -kLegResidualTol * scale) return;
    LegSolution sol{delta1, d1, res.delta2, d2, res.heading,
                    std::max(0.0, res.along), 0.0};
    sol.duration = turn_duration(delta1, p) + turn_duration(res.delta2, p) +
                   sol.length / p.v;
    if (!best || sol.duration < best->duration) best = sol;
  };

  for (int d1 : {1, -1}) {
    for (int d2 : {1, -1}) {
      // The first turn amount is scanned on [0, 2 pi); the second follows.
      double prev_delta = 0.0;
      LegResidual prev = leg_residual(a, b, 0.0, d1, d2, p, false);
      if (prev.cross == 0.0) consider(0.0, d1, d2);
      for (int i = 1; i <= kLegScanPoints; ++i) {
        const double delta =
            i == kLegScanPoints
                ? std::nextafter(kTwoPi, 0.0)
                : kTwoPi * static_cast<double>(i) / kLegScanPoints;
        const LegResidual cur = leg_residual(a, b, delta, d1, d2, p, false);
        if ((prev.cross < 0.0) != (cur.cross < 0.0)) {
          double lo = prev_delta, hi = delta;
          double f_lo = prev.cross;
          for (int iter = 0; iter < 200 && lo < hi; ++iter) {
            const double mid = 0.5 * (lo + hi);
            if (mid <= lo || mid >= hi) break;
            const double f_mid = leg_residual(a, b, mid, d1, d2, p, false).cross;
            if (f_mid == 0.0) {
              lo = hi = mid;
              break;
            }
            if ((f_mid < 0.0) == (f_lo < 0.0)) {
              lo = mid;
              f_lo = f_mid;
            } else {
              hi = mid;
            }
          }
          // Bisection may close on a jump of the second turn amount; the
          // exact residual check in `consider` rejects those.
          consider(0.5 * (lo + hi), d1, d2);
        }
        prev = cur;
        prev_delta = delta;
      }
    }
  }
  return best;
}

class TrajectoryBuilder {
 public:
  explicit TrajectoryBuilder(const PlannerParams& p) : params_(p) {}

  void append(std::vector<TrajectorySample> piece, double duration,
              SegmentKind kind, int turn) {
    if (piece.empty()) return;
    if (!samples_.empty()) {
      samples_.pop_back();
      segments_.back().end = samples_.size();
    }
    SegmentInfo info;
    info.kind = kind;
    info.first = samples_.size();
    info.t_start = offset_;
    info.t_end = offset_ + duration;
    info.turn = turn;
    const int id = static_cast<int>(segments_.size());
    for (auto& s : piece) {
      s.t += offset_;
      s.segment_id = id;
      samples_.push_back(s);
    }
    info.end = samples_.size();
    segments_.push_back(info);
    offset_ += duration;
    // Snap the time of the end sample to the accumulated offset.
    samples_.back().t = offset_;
  }

  // Splits a CCTurn's samples into its stages.
  void append_turn(const CCTurnResult& turn) {
    if (turn.samples.empty()) return;
    const int turn_index = static_cast<int>(turns_.size());
    PlannedTurn planned;
    planned.waypoints = turn.waypoints;
    planned.t_start = offset_;
    std::vector<TrajectorySample> stage;
    auto flush = [&](double stage_end) {
      if (stage.empty()) return;
      const double start = stage.front().t;
      for (auto& s : stage) s.t -= start;
      const SegmentKind kind = stage.front().kind;
      append(std::move(stage), stage_end - start, kind, turn_index);
      stage.clear();
    };
    const auto& w = turn.waypoints;
    for (std::size_t i = 0; i < turn.samples.size(); ++i) {
      const auto& s = turn.samples[i];
      if (!stage.empty() && s.kind != stage.front().kind) {
        // Stage boundary: the joint sample also closes the previous stage.
        TrajectorySample closing = s;
        closing.kind = stage.front().kind;
        stage.push_back(closing);
        flush(s.t);
      }
      stage.push_back(s);
    }
    flush(w.w_e.t);
    planned.t_end = offset_;
    turns_.push_back(planned);
  }

  CCTrajectory finish() && {
    return CCTrajectory(params_, std::move(samples_), std::move(segments_),
                        std::move(turns_));
  }

  Eigen::Vector2d end_position() const { return samples_.back().r; }

 private:
  PlannerParams params_;
  std::vector<TrajectorySample> samples_;
  std::vector<SegmentInfo> segments_;
  std::vector<PlannedTurn> turns_;
  double offset_ = 0.0;
};

}  // namespace detail

// Joins consecutive oriented waypoints with turn-line-turn legs (shortest
// duration among the four turn-direction combinations). The result passes
// through every waypoint with its heading and carries analytic derivatives.
inline CCTrajectory connect_waypoints(const std::vector<Waypoint>& wps,
                                      const PlannerParams& p) {
  p.validate();
  if (wps.size() < 2) throw ParamError("at least two waypoints are required");
  for (std::size_t i = 0; i < wps.size(); ++i) {
    const auto& w = wps[i];
    if (!std::isfinite(w.x) || !std::isfinite(w.y) || !std::isfinite(w.psi)) {
      throw ParamError("waypoint " + std::to_string(i) + " is not finite");
    }
  }

  detail::TrajectoryBuilder builder(p);
  for (std::size_t i = 0; i + 1 < wps.size(); ++i) {
    const Waypoint& a = wps[i];
    const Waypoint& b = wps[i + 1];
    const Eigen::Vector2d pa(a.x, a.y), pb(b.x, b.y);
    const Eigen::Vector2d gap = pb - pa;
    const auto fail = [&](const std::string& why) {
      return InfeasibleError(i, i + 1,
                             "no continuous-curvature connection between "
                             "waypoints " + std::to_string(i) + " and " +
                             std::to_string(i + 1) + ": " + why);
    };
    if (!(gap.norm() > 0.0)) throw fail("coincident positions");

    const double bearing = std::atan2(gap.y(), gap.x());
    if (std::abs(angle_diff(a.psi, bearing)) < 1e-12 &&
        std::abs(angle_diff(b.psi, bearing)) < 1e-12) {
      builder.append(line_segment(pa, pb, p), gap.norm() / p.v, SegmentKind::kLine, -1);
      continue;
    }

    const auto leg = detail::solve_leg(a, b, p);
    if (!leg) throw fail("turn-line-turn search found no solution");

    const CCTurnResult first = cc_turn(a, leg->delta1, leg->d1, p);
    builder.append_turn(first);
    const Eigen::Vector2d p1 =
        first.samples.empty() ? pa : Eigen::Vector2d(first.waypoints.w_e.x, first.waypoints.w_e.y);
    const Eigen::Vector2d second_disp = detail::rotate(
        detail::turn_displacement(leg->delta2, leg->d2, p), leg->heading);
    const Eigen::Vector2d p2 = pb - second_disp;
    if (leg->length > detail::kLegLineMin) {
      builder.append(line_segment(p1, p2, p), (p2 - p1).norm() / p.v,
                     SegmentKind::kLine, -1);
    }
    const Waypoint second_entry{p2.x(), p2.y(), leg->heading};
    CCTurnResult second = cc_turn(second_entry, leg->delta2, leg->d2, p);
    if (!second.samples.empty()) {
      // Land exactly on the waypoint.
      auto& last = second.samples.back();
      last.r = pb;
      second.waypoints.w_e.x = pb.x();
      second.waypoints.w_e.y = pb.y();
    }
    builder.append_turn(second);
  }
  return annotate_derivatives(std::move(builder).finish());
}

}  // namespace epstraj

#endif  // EPSTRAJ_CCPLANNER_HPP_
