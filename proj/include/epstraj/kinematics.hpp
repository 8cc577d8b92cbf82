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

#ifndef EPSTRAJ_KINEMATICS_HPP_
#define EPSTRAJ_KINEMATICS_HPP_

// Kinematic vehicle models (unicycle, Ackermann bicycle, extended Dubins,
// single trailer) written as pure state-derivative functions, plus a fixed
// step RK4 integrator shared by all of them.
//
// Rates are returned as fixed-size Eigen vectors whose ordering matches the
// state fields in declaration order, skipping configuration constants
// (wheelbase, hitch length, Dubins speed) which are carried with the state but
// never integrated.

#include <cmath>
#include <string>
#include <utility>

#include <Eigen/Core>

#include "epstraj/angles.hpp"
#include "epstraj/errors.hpp"

namespace epstraj {

struct UnicycleState {
  double x = 0.0;
  double y = 0.0;
  double psi = 0.0;
  double v = 0.0;
  double omega = 0.0;
};

struct UnicycleInput {
  double a = 0.0;      // longitudinal acceleration [m/s^2]
  double alpha = 0.0;  // angular acceleration [rad/s^2]
};

struct BicycleState {
  double x = 0.0;
  double y = 0.0;
  double psi = 0.0;
  double v = 0.0;
  double phi = 0.0;        // steering angle [rad]
  double wheelbase = 1.0;  // L [m], not integrated
};

struct BicycleInput {
  double a = 0.0;
  double xi = 0.0;  // steering rate [rad/s]
};

struct ExtendedDubinsState {
  double x = 0.0;
  double y = 0.0;
  double psi = 0.0;
  double kappa = 0.0;
  double v = 1.0;  // constant speed of the segment, not integrated
};

struct ExtendedDubinsInput {
  double sigma = 0.0;  // curvature rate dkappa/dt [1/(m s)]
};

struct TrailerState {
  double x = 0.0;
  double y = 0.0;
  double psi = 0.0;
  double psi_t = 0.0;  // trailer heading [rad]
  double v = 0.0;
  double omega = 0.0;
  double hitch = 1.0;  // d [m], not integrated
};

// Packing between state structs and integrable vectors. `unpack` copies the
// configuration constants from `proto`.
template <class S>
struct StateTraits;

template <>
struct StateTraits<UnicycleState> {
  static constexpr int kDim = 5;
  using Vector = Eigen::Matrix<double, kDim, 1>;
  static Vector pack(const UnicycleState& s) {
    return Vector(s.x, s.y, s.psi, s.v, s.omega);
  }
  static UnicycleState unpack(const Vector& q, const UnicycleState&) {
    return {q[0], q[1], q[2], q[3], q[4]};
  }
  static void normalize(UnicycleState& s) { s.psi = wrap_angle(s.psi); }
};

template <>
struct StateTraits<BicycleState> {
  static constexpr int kDim = 5;
  using Vector = Eigen::Matrix<double, kDim, 1>;
  static Vector pack(const BicycleState& s) {
    return Vector(s.x, s.y, s.psi, s.v, s.phi);
  }
  static BicycleState unpack(const Vector& q, const BicycleState& proto) {
    return {q[0], q[1], q[2], q[3], q[4], proto.wheelbase};
  }
  static void normalize(BicycleState& s) { s.psi = wrap_angle(s.psi); }
};

template <>
struct StateTraits<ExtendedDubinsState> {
  static constexpr int kDim = 4;
  using Vector = Eigen::Matrix<double, kDim, 1>;
  static Vector pack(const ExtendedDubinsState& s) {
    return Vector(s.x, s.y, s.psi, s.kappa);
  }
  static ExtendedDubinsState unpack(const Vector& q,
                                    const ExtendedDubinsState& proto) {
    return {q[0], q[1], q[2], q[3], proto.v};
  }
  static void normalize(ExtendedDubinsState& s) { s.psi = wrap_angle(s.psi); }
};

template <>
struct StateTraits<TrailerState> {
  static constexpr int kDim = 6;
  using Vector = Eigen::Matrix<double, kDim, 1>;
  static Vector pack(const TrailerState& s) {
    Vector q;
    q << s.x, s.y, s.psi, s.psi_t, s.v, s.omega;
    return q;
  }
  static TrailerState unpack(const Vector& q, const TrailerState& proto) {
    return {q[0], q[1], q[2], q[3], q[4], q[5], proto.hitch};
  }
  static void normalize(TrailerState& s) {
    s.psi = wrap_angle(s.psi);
    s.psi_t = wrap_angle(s.psi_t);
  }
};

template <class S>
using StateRate = typename StateTraits<S>::Vector;

// [x_dot, y_dot, psi_dot, v_dot, omega_dot]
inline StateRate<UnicycleState> unicycle_derivative(const UnicycleState& s,
                                                    const UnicycleInput& u) {
  return {s.v * std::cos(s.psi), s.v * std::sin(s.psi), s.omega, u.a,
          u.alpha};
}

inline void check_steering(const BicycleState& s) {
  if (!(std::abs(s.phi) < kPi / 2.0)) {
    throw DomainError("bicycle steering angle |phi| must be < pi/2, got " +
                      std::to_string(s.phi));
  }
  if (!(s.wheelbase > 0.0)) {
    throw DomainError("bicycle wheelbase must be positive");
  }
}

// Yaw rate of the bicycle, omega = (v / L) tan(phi).
inline double bicycle_yaw_rate(const BicycleState& s) {
  check_steering(s);
  return s.v / s.wheelbase * std::tan(s.phi);
}

// [x_dot, y_dot, psi_dot, v_dot, phi_dot]
inline StateRate<BicycleState> bicycle_derivative(const BicycleState& s,
                                                  const BicycleInput& u) {
  const double yaw_rate = bicycle_yaw_rate(s);
  return {s.v * std::cos(s.psi), s.v * std::sin(s.psi), yaw_rate, u.a, u.xi};
}

// [x_dot, y_dot, psi_dot, kappa_dot]
inline StateRate<ExtendedDubinsState> extended_dubins_derivative(
    const ExtendedDubinsState& s, const ExtendedDubinsInput& u) {
  if (!(s.v > 0.0)) {
    throw DomainError("extended Dubins speed must be positive");
  }
  return {s.v * std::cos(s.psi), s.v * std::sin(s.psi), s.v * s.kappa,
          u.sigma};
}

// [x_dot, y_dot, psi_dot, psi_t_dot, v_dot, omega_dot]
inline StateRate<TrailerState> trailer_derivative(const TrailerState& s,
                                                  const UnicycleInput& u) {
  if (!(s.hitch > 0.0)) {
    throw DomainError("trailer hitch length must be positive");
  }
  StateRate<TrailerState> rate;
  rate << s.v * std::cos(s.psi), s.v * std::sin(s.psi), s.omega,
      s.v / s.hitch * std::sin(s.psi - s.psi_t), u.a, u.alpha;
  return rate;
}

inline Eigen::Vector2d trailer_position(const TrailerState& s) {
  return {s.x - s.hitch * std::cos(s.psi_t), s.y - s.hitch * std::sin(s.psi_t)};
}

// Unicycle state that moves identically to the given bicycle.
inline UnicycleState to_unicycle(const BicycleState& s) {
  return {s.x, s.y, s.psi, s.v, bicycle_yaw_rate(s)};
}

// Angular acceleration produced by bicycle inputs:
// alpha = a tan(phi) / L + v xi / (L cos^2 phi).
inline double angular_acceleration_from_steering(double a, double xi,
                                                 const BicycleState& s) {
  check_steering(s);
  const double c = std::cos(s.phi);
  return a / s.wheelbase * std::tan(s.phi) + s.v / s.wheelbase * xi / (c * c);
}

namespace detail {

template <class S>
void require_finite(const S& s, const char* what) {
  const auto q = StateTraits<S>::pack(s);
  if (!q.allFinite()) {
    throw NumericalError(std::string("non-finite state after ") + what);
  }
}

inline void require_positive_step(double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) {
    throw ParamError("integration step dt must be positive and finite");
  }
}

}  // namespace detail

// One classical RK4 step of a time-varying vector field
// f(const S&, double t) -> StateRate<S>. Heading fields are wrapped to
// [-pi, pi) on the returned state only; intermediate stages stay continuous.
template <class S, class Field>
S integrate_field_step(Field&& f, const S& s, double t, double dt) {
  detail::require_positive_step(dt);
  using Traits = StateTraits<S>;
  const auto q0 = Traits::pack(s);
  const auto k1 = f(s, t);
  const auto k2 = f(Traits::unpack(q0 + 0.5 * dt * k1, s), t + 0.5 * dt);
  const auto k3 = f(Traits::unpack(q0 + 0.5 * dt * k2, s), t + 0.5 * dt);
  const auto k4 = f(Traits::unpack(q0 + dt * k3, s), t + dt);
  S next = Traits::unpack(q0 + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4), s);
  detail::require_finite(next, "integration step");
  Traits::normalize(next);
  return next;
}

// One RK4 step of `model(state, input)` with the input held over the step.
template <class S, class In, class Model>
S integrate_step(Model&& model, const S& s, const In& u, double dt) {
  return integrate_field_step(
      [&](const S& stage, double) { return model(stage, u); }, s, 0.0, dt);
}

}  // namespace epstraj

#endif  // EPSTRAJ_KINEMATICS_HPP_
