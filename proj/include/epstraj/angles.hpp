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

#ifndef EPSTRAJ_ANGLES_HPP_
#define EPSTRAJ_ANGLES_HPP_

#include <cmath>
#include <numbers>

namespace epstraj {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Wraps an angle into [-pi, pi).
inline double wrap_angle(double angle) {
  double wrapped = std::fmod(angle + kPi, kTwoPi);
  if (wrapped < 0.0) wrapped += kTwoPi;
  wrapped -= kPi;
  // fmod can land exactly on +pi after the shift for inputs just below -pi.
  if (wrapped >= kPi) wrapped -= kTwoPi;
  return wrapped;
}

// Signed smallest difference a - b, in [-pi, pi).
inline double angle_diff(double a, double b) { return wrap_angle(a - b); }

}  // namespace epstraj

#endif  // EPSTRAJ_ANGLES_HPP_
