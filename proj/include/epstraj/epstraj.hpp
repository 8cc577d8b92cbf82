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

#ifndef EPSTRAJ_EPSTRAJ_HPP_
#define EPSTRAJ_EPSTRAJ_HPP_

#include "epstraj/angles.hpp"
#include "epstraj/ccplanner.hpp"
#include "epstraj/csv.hpp"
#include "epstraj/epsilon_control.hpp"
#include "epstraj/errors.hpp"
#include "epstraj/flatness.hpp"
#include "epstraj/kinematics.hpp"
#include "epstraj/scenario.hpp"
#include "epstraj/simulator.hpp"

#endif  // EPSTRAJ_EPSTRAJ_HPP_
