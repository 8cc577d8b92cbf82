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

// epstraj: plan a CCTrajectory through a scenario's waypoints, track it in
// closed loop and write CSV logs plus a metrics report.

#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "epstraj/scenario.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Plan and track continuous-curvature trajectories with the epsilon-point law"};
  app.set_version_flag("--version", "epstraj 1.0.0");

  std::string scenario_path;
  bool plan_only = false;
  std::optional<std::string> mode;
  std::optional<std::string> out_dir;
  std::optional<long> seed;

  app.add_option("--scenario", scenario_path, "Scenario file (key = value format)")
      ->required();
  app.add_flag("--plan-only", plan_only, "Write the planned trajectory only, skip simulation");
  app.add_option("--mode", mode, "Tracking mode, overrides the scenario file")
      ->check(CLI::IsMember({"plain", "eps"}));
  app.add_option("--out", out_dir, "Output directory, overrides the scenario file");
  app.add_option("--seed", seed, "Reserved for perturbation sampling; runs are deterministic");

  CLI11_PARSE(app, argc, argv);

  epstraj::Scenario sc;
  try {
    sc = epstraj::parse_scenario(scenario_path);
  } catch (const std::exception& e) {
    std::cerr << "scenario: " << e.what() << '\n';
    return 2;
  }

  epstraj::RunOptions opts;
  opts.plan_only = plan_only;
  opts.output_dir = out_dir;
  opts.seed = seed;
  if (mode) {
    opts.mode = *mode == "plain" ? epstraj::TrackingMode::kPlain
                                 : epstraj::TrackingMode::kEpsilonTrajectory;
  }

  const auto result = epstraj::run_scenario(sc, opts);
  if (result.exit_code != 0) {
    std::cerr << result.message << '\n';
    return result.exit_code;
  }
  for (const auto& path : result.written) std::cout << "wrote " << path.string() << '\n';
  return 0;
}
