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

#ifndef EPSTRAJ_EPSILON_CONTROL_HPP_
#define EPSTRAJ_EPSILON_CONTROL_HPP_

// Point control and its transfer to nonholonomic vehicles through the
// epsilon-point, a point held a fixed distance epsilon ahead of the vehicle
// along its heading. The epsilon-point of a unicycle is fully actuated, so a
// linear double-integrator controller designed for it can be mapped exactly
// to (a, alpha) and, for the bicycle, further to (a, xi).

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>

#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include "epstraj/errors.hpp"
#include "epstraj/kinematics.hpp"

namespace epstraj {

// p = [q; q_dot] of a fully actuated planar point.
struct PointState {
  Eigen::Vector2d q = Eigen::Vector2d::Zero();
  Eigen::Vector2d q_dot = Eigen::Vector2d::Zero();
};

// Reference position with its first two time derivatives; q_ddot is the
// feed-forward acceleration.
struct PointReference {
  Eigen::Vector2d q = Eigen::Vector2d::Zero();
  Eigen::Vector2d q_dot = Eigen::Vector2d::Zero();
  Eigen::Vector2d q_ddot = Eigen::Vector2d::Zero();
};

class EpsilonParams {
 public:
  explicit EpsilonParams(double epsilon) : epsilon_(epsilon) {
    if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
      throw ParamError("epsilon must be positive and finite");
    }
  }
  double epsilon() const { return epsilon_; }

 private:
  double epsilon_;
};

// State feedback gain K (2x4) acting on the error z = [q - q_r; q_dot - q_r_dot]
// (position error first, then velocity error). Construction rejects any K for
// which A - BK is not Hurwitz.
class GainMatrix {
 public:
  using Matrix = Eigen::Matrix<double, 2, 4>;

  explicit GainMatrix(const Matrix& k) : k_(k) {
    if (!k_.allFinite()) throw ParamError("gain matrix must be finite");
    const auto eig = closed_loop_eigenvalues();
    for (int i = 0; i < eig.size(); ++i) {
      if (!(eig[i].real() < 0.0)) {
        throw ParamError("gain matrix rejected: eigenvalue of A - BK with "
                         "real part " + std::to_string(eig[i].real()) +
                         " >= 0");
      }
    }
  }

  // Decoupled PD per axis, K = [kp I, kd I].
  static GainMatrix pd(double kp, double kd) {
    Matrix k = Matrix::Zero();
    k(0, 0) = k(1, 1) = kp;
    k(0, 2) = k(1, 3) = kd;
    return GainMatrix(k);
  }

  static GainMatrix defaults() { return pd(1.0, 2.0); }

  const Matrix& matrix() const { return k_; }

  // A - BK for the double integrator p_dot = A p + B u.
  Eigen::Matrix4d closed_loop() const {
    Eigen::Matrix4d a = Eigen::Matrix4d::Zero();
    a.topRightCorner<2, 2>().setIdentity();
    Eigen::Matrix<double, 4, 2> b = Eigen::Matrix<double, 4, 2>::Zero();
    b.bottomRows<2>().setIdentity();
    return a - b * k_;
  }

  Eigen::Vector4cd closed_loop_eigenvalues() const {
    Eigen::EigenSolver<Eigen::Matrix4d> solver(closed_loop(), false);
    return solver.eigenvalues();
  }

  // Largest real part among the closed-loop eigenvalues (the slowest mode).
  double slowest_rate() const {
    const auto eig = closed_loop_eigenvalues();
    double worst = eig[0].real();
    for (int i = 1; i < eig.size(); ++i) worst = std::max(worst, eig[i].real());
    return worst;
  }

 private:
  Matrix k_;
};

// u = q_r_ddot - K (p - p_r).
inline Eigen::Vector2d point_control(const PointState& p,
                                     const PointReference& ref,
                                     const GainMatrix& gains) {
  Eigen::Vector4d z;
  z << p.q - ref.q, p.q_dot - ref.q_dot;
  return ref.q_ddot - gains.matrix() * z;
}

// R_eps maps [v, omega] to the epsilon-point velocity.
inline Eigen::Matrix2d epsilon_rotation(double psi, double epsilon) {
  const double c = std::cos(psi);
  const double s = std::sin(psi);
  Eigen::Matrix2d r;
  r << c, -epsilon * s, s, epsilon * c;
  return r;
}

inline Eigen::Matrix2d epsilon_rotation_inverse(double psi, double epsilon) {
  const double c = std::cos(psi);
  const double s = std::sin(psi);
  Eigen::Matrix2d r;
  r << c, s, -s / epsilon, c / epsilon;
  return r;
}

// omega_hat such that q_eps_ddot = R_eps (omega_hat v + a).
inline Eigen::Matrix2d omega_hat(double omega, double epsilon) {
  Eigen::Matrix2d w;
  w << 0.0, -epsilon * omega, omega / epsilon, 0.0;
  return w;
}

inline PointState epsilon_point(const UnicycleState& s,
                                const EpsilonParams& eps) {
  const double e = eps.epsilon();
  PointState p;
  p.q = Eigen::Vector2d(s.x + e * std::cos(s.psi), s.y + e * std::sin(s.psi));
  p.q_dot = epsilon_rotation(s.psi, e) * Eigen::Vector2d(s.v, s.omega);
  return p;
}

// Acceleration of the epsilon-point under unicycle input u.
inline Eigen::Vector2d epsilon_point_acceleration(const UnicycleState& s,
                                                  const UnicycleInput& u,
                                                  const EpsilonParams& eps) {
  const double e = eps.epsilon();
  const Eigen::Matrix2d r = epsilon_rotation(s.psi, e);
  const Eigen::Vector2d vel(s.v, s.omega);
  return r * omega_hat(s.omega, e) * vel + r * Eigen::Vector2d(u.a, u.alpha);
}

// Unicycle input that makes the epsilon-point acceleration equal u_eps:
// a = R_eps^-1 u_eps - omega_hat v.
inline UnicycleInput unicycle_input_from_point(const Eigen::Vector2d& u_eps,
                                               const UnicycleState& s,
                                               const EpsilonParams& eps) {
  const double e = eps.epsilon();
  const Eigen::Vector2d a = epsilon_rotation_inverse(s.psi, e) * u_eps -
                            omega_hat(s.omega, e) * Eigen::Vector2d(s.v, s.omega);
  return {a[0], a[1]};
}

inline constexpr double kDefaultVelocityFloor = 1e-3;

// xi = cos^2(phi) (L alpha - a tan(phi)) / v; a passes through.
inline BicycleInput bicycle_input_from_unicycle(
    double a, double alpha, const BicycleState& s,
    double v_min = kDefaultVelocityFloor) {
  check_steering(s);
  if (!(std::abs(s.v) > v_min)) {
    throw SingularVelocity("steering-rate mapping undefined at |v| = " +
                           std::to_string(std::abs(s.v)) + " <= v_min = " +
                           std::to_string(v_min));
  }
  const double c = std::cos(s.phi);
  return {a, c * c * (s.wheelbase * alpha - a * std::tan(s.phi)) / s.v};
}

// Native input type of each tracked vehicle model.
template <class S>
struct VehicleTraits;

template <>
struct VehicleTraits<UnicycleState> {
  using Input = UnicycleInput;
  static UnicycleState as_unicycle(const UnicycleState& s) { return s; }
  static Input from_unicycle_input(const UnicycleInput& u,
                                   const UnicycleState&, double) {
    return u;
  }
  static StateRate<UnicycleState> derivative(const UnicycleState& s,
                                             const Input& u) {
    return unicycle_derivative(s, u);
  }
};

template <>
struct VehicleTraits<BicycleState> {
  using Input = BicycleInput;
  static UnicycleState as_unicycle(const BicycleState& s) {
    return to_unicycle(s);
  }
  static Input from_unicycle_input(const UnicycleInput& u,
                                   const BicycleState& s, double v_min) {
    return bicycle_input_from_unicycle(u.a, u.alpha, s, v_min);
  }
  static StateRate<BicycleState> derivative(const BicycleState& s,
                                            const Input& u) {
    return bicycle_derivative(s, u);
  }
};

// Everything the epsilon-tracking law needs besides the reference.
struct EpsilonTracker {
  GainMatrix gains = GainMatrix::defaults();
  EpsilonParams eps{1.0};
  double v_min = kDefaultVelocityFloor;
};

// epsilon_point -> point_control -> unicycle mapping -> vehicle mapping.
template <class S>
typename VehicleTraits<S>::Input epsilon_tracking_input(
    const S& s, const PointReference& ref, const EpsilonTracker& tracker) {
  using Traits = VehicleTraits<S>;
  const UnicycleState uni = Traits::as_unicycle(s);
  const Eigen::Vector2d u_eps =
      point_control(epsilon_point(uni, tracker.eps), ref, tracker.gains);
  return Traits::from_unicycle_input(
      unicycle_input_from_point(u_eps, uni, tracker.eps), s, tracker.v_min);
}

template <class S>
struct TrackingStep {
  S state;
  typename VehicleTraits<S>::Input input;  // input at the start of the step
};

// One step with the reference and the resulting input held constant over dt.
template <class S>
TrackingStep<S> epsilon_tracking_step(const S& s, const PointReference& ref,
                                      const EpsilonTracker& tracker,
                                      double dt) {
  using Traits = VehicleTraits<S>;
  const auto input = epsilon_tracking_input(s, ref, tracker);
  return {integrate_step(
              [](const S& st, const typename Traits::Input& u) {
                return Traits::derivative(st, u);
              },
              s, input, dt),
          input};
}

// One step with a time-varying reference `ref_at(t) -> PointReference`; the
// control law is re-evaluated at every integrator stage.
template <class S, class RefFn>
TrackingStep<S> epsilon_tracking_step(const S& s, RefFn&& ref_at, double t,
                                      const EpsilonTracker& tracker,
                                      double dt) {
  using Traits = VehicleTraits<S>;
  const auto input = epsilon_tracking_input(s, ref_at(t), tracker);
  auto field = [&](const S& stage, double stage_t) {
    return Traits::derivative(
        stage, epsilon_tracking_input(stage, ref_at(stage_t), tracker));
  };
  return {integrate_field_step(field, s, t, dt), input};
}

}  // namespace epstraj

#endif  // EPSTRAJ_EPSILON_CONTROL_HPP_
