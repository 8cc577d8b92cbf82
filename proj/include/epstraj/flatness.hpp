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

#ifndef EPSTRAJ_FLATNESS_HPP_
#define EPSTRAJ_FLATNESS_HPP_

// Unicycle states recovered from a planar position trajectory (the flat
// output) and the epsilon-trajectory built from them: the reference shifted
// epsilon ahead along its own heading. Tracking the epsilon-trajectory with
// the epsilon-point drives the vehicle itself onto the original reference.

#include <cmath>
#include <string>

#include <Eigen/Core>

#include "epstraj/epsilon_control.hpp"
#include "epstraj/errors.hpp"

namespace epstraj {

// Reference position and its first three time derivatives.
struct TrajectoryDerivatives {
  Eigen::Vector2d r = Eigen::Vector2d::Zero();
  Eigen::Vector2d r_dot = Eigen::Vector2d::Zero();
  Eigen::Vector2d r_ddot = Eigen::Vector2d::Zero();
  Eigen::Vector2d r_dddot = Eigen::Vector2d::Zero();
};

struct FlatStates {
  double psi_r = 0.0;
  double v_r = 0.0;
  double a_r = 0.0;
  double omega_r = 0.0;
  double alpha_r = 0.0;
};

struct EpsilonReference {
  Eigen::Vector2d q_eps_r = Eigen::Vector2d::Zero();
  Eigen::Vector2d q_eps_r_dot = Eigen::Vector2d::Zero();
  Eigen::Vector2d q_eps_r_ddot = Eigen::Vector2d::Zero();
  double psi_eps_r = 0.0;
  double v_eps_r = 0.0;
  double omega_eps_r = 0.0;

  PointReference point_reference() const {
    return {q_eps_r, q_eps_r_dot, q_eps_r_ddot};
  }
};

inline constexpr double kDefaultFlatVelocityFloor = 1e-6;

inline FlatStates flat_states(const TrajectoryDerivatives& d,
                              double v_floor = kDefaultFlatVelocityFloor) {
  const double xd = d.r_dot.x(), yd = d.r_dot.y();
  const double xdd = d.r_ddot.x(), ydd = d.r_ddot.y();
  const double xddd = d.r_dddot.x(), yddd = d.r_dddot.y();

  FlatStates f;
  f.v_r = std::sqrt(xd * xd + yd * yd);
  if (!(f.v_r >= v_floor)) {
    throw DegenerateVelocity("reference speed " + std::to_string(f.v_r) +
                             " below floor " + std::to_string(v_floor));
  }
  f.psi_r = std::atan2(yd, xd);
  f.a_r = (xd * xdd + yd * ydd) / f.v_r;
  f.omega_r = (xd * ydd - yd * xdd) / (f.v_r * f.v_r);
  f.alpha_r = (xd * yddd - yd * xddd) / (f.v_r * f.v_r) -
              2.0 * f.a_r * f.omega_r / f.v_r;
  return f;
}

// q_eps_r = r + eps [cos psi_r, sin psi_r], with derivatives
// q_dot = R v_r and q_ddot = R omega_hat v_r + R a_r (R, omega_hat at psi_r).
inline EpsilonReference epsilon_reference(
    const TrajectoryDerivatives& d, const FlatStates& f,
    const EpsilonParams& eps, double v_floor = kDefaultFlatVelocityFloor) {
  const double e = eps.epsilon();
  const Eigen::Matrix2d rot = epsilon_rotation(f.psi_r, e);
  const Eigen::Vector2d vel(f.v_r, f.omega_r);
  const Eigen::Vector2d acc(f.a_r, f.alpha_r);

  EpsilonReference out;
  out.q_eps_r = d.r + e * Eigen::Vector2d(std::cos(f.psi_r), std::sin(f.psi_r));
  out.q_eps_r_dot = rot * vel;
  out.q_eps_r_ddot = rot * omega_hat(f.omega_r, e) * vel + rot * acc;

  const Eigen::Vector2d& qd = out.q_eps_r_dot;
  const Eigen::Vector2d& qdd = out.q_eps_r_ddot;
  out.v_eps_r = qd.norm();
  if (!(out.v_eps_r >= v_floor)) {
    throw DegenerateVelocity("epsilon-trajectory speed " +
                             std::to_string(out.v_eps_r) + " below floor");
  }
  out.psi_eps_r = std::atan2(qd.y(), qd.x());
  out.omega_eps_r =
      (qd.x() * qdd.y() - qd.y() * qdd.x()) / (out.v_eps_r * out.v_eps_r);
  return out;
}

inline EpsilonReference epsilon_reference(const TrajectoryDerivatives& d,
                                          const EpsilonParams& eps) {
  return epsilon_reference(d, flat_states(d), eps);
}

}  // namespace epstraj

#endif  // EPSTRAJ_FLATNESS_HPP_
