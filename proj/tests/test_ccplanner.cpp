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

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "epstraj/ccplanner.hpp"
#include "planner_checks.hpp"

namespace epstraj {
namespace {

using testing::check_plan;

PlannerParams regression_params() { return {5.0, 2.7, 0.17, 0.01}; }

const std::vector<Waypoint> kRegressionWaypoints = {
    {0, 0, 0}, {30, 5, 5 * kPi / 4}, {50, 0, kPi / 4}};

TEST(PlannerParams, ClothoidDurationForRegressionValues) {
  EXPECT_NEAR(regression_params().clothoid_duration(), 15.88, 5e-3);
  EXPECT_NEAR(regression_params().clothoid_duration(), 2.7 / 0.17, 1e-12);
}

TEST(PlannerParams, Validation) {
  EXPECT_THROW((PlannerParams{0, 1, 1, 0.1}).validate(), ParamError);
  EXPECT_THROW((PlannerParams{1, -1, 1, 0.1}).validate(), ParamError);
  EXPECT_THROW((PlannerParams{1, 1, NAN, 0.1}).validate(), ParamError);
  EXPECT_THROW((PlannerParams{1, 1, 1, 0}).validate(), ParamError);
}

TEST(ClothoidSegment, DurationAndHeading) {
  const PlannerParams p = regression_params();
  const auto seg = clothoid_segment({0, 0, 0, 0}, p.kappa_max, p);
  ASSERT_FALSE(seg.empty());
  EXPECT_NEAR(seg.back().t, p.kappa_max / p.sigma_max, 1e-12);
  EXPECT_NEAR(seg.back().kappa, p.kappa_max, 1e-15);
  const double psi_cs = p.v * p.kappa_max * p.kappa_max / (2 * p.sigma_max);
  EXPECT_NEAR(angle_diff(seg.back().psi, wrap_angle(psi_cs)), 0.0, 1e-9);
  EXPECT_NEAR(psi_cs, p.clothoid_heading(), 1e-12);
  // The curvature ramp is linear at sigma_max.
  for (const auto& s : seg) EXPECT_NEAR(s.kappa, p.sigma_max * s.t, 1e-12);
}

TEST(ClothoidSegment, EmptyWhenCurvatureMatches) {
  EXPECT_TRUE(clothoid_segment({1, 2, 0.3, 0.5}, 0.5, regression_params()).empty());
  EXPECT_THROW(clothoid_segment({0, 0, 0, 0}, 3.0, regression_params()), ParamError);
}

// Zero-initial-condition clothoid as Fresnel-type integrals by composite Simpson.
Eigen::Vector2d fresnel_position(double t, double v, double sigma) {
  const int n = 20000;
  const double h = t / n;
  Eigen::Vector2d sum = Eigen::Vector2d::Zero();
  for (int i = 0; i <= n; ++i) {
    const double s = i * h;
    const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    const double psi = 0.5 * v * sigma * s * s;
    sum += w * Eigen::Vector2d(std::cos(psi), std::sin(psi));
  }
  return v * h / 3.0 * sum;
}

TEST(ClothoidSegment, MatchesFresnelIntegrals) {
  const PlannerParams p{2.0, 1.0, 0.5, 0.02};
  const auto seg = clothoid_segment({0, 0, 0, 0}, p.kappa_max, p);
  for (std::size_t i = 0; i < seg.size(); i += 7) {
    EXPECT_LT((seg[i].r - fresnel_position(seg[i].t, p.v, p.sigma_max)).norm(), 1e-7);
  }
}

TEST(ArcSegment, EmptySweep) {
  EXPECT_TRUE(arc_segment({0, 0, 0, 1}, 0.0, regression_params(), 1).empty());
  EXPECT_THROW(arc_segment({0, 0, 0, 1}, -0.1, regression_params(), 1), ParamError);
  EXPECT_THROW(arc_segment({0, 0, 0, 1}, 0.1, regression_params(), 0), ParamError);
}

TEST(ArcSegment, QuarterCircle) {
  const PlannerParams p{1.0, 1.0, 1.0, 0.01};
  for (int d_c : {1, -1}) {
    const auto seg = arc_segment({0, 0, 0, -d_c * 1.0}, kPi / 2, p, d_c);
    EXPECT_NEAR(seg.back().t, kPi / 2, 1e-12);
    // Center at (0, -d_c); the start point rotates 90 degrees about it.
    EXPECT_NEAR(seg.back().r.x(), 1.0, 1e-12);
    EXPECT_NEAR(seg.back().r.y(), -d_c * 1.0, 1e-12);
    EXPECT_NEAR(seg.back().psi, -d_c * kPi / 2, 1e-12);
    for (const auto& s : seg) {
      EXPECT_NEAR((s.r - Eigen::Vector2d(0, -d_c)).norm(), 1.0, 1e-12);
      EXPECT_EQ(s.kappa, -d_c * 1.0);
    }
    // Equal chords between full steps.
    const double chord = 2.0 * std::sin(p.v * p.dt / 2.0);
    for (std::size_t i = 0; i + 2 < seg.size(); ++i) {
      EXPECT_NEAR((seg[i + 1].r - seg[i].r).norm(), chord, 1e-12);
    }
  }
}

TEST(LineSegment, Examples) {
  const PlannerParams p{5.0, 1.0, 1.0, 0.1};
  auto seg = line_segment({0, 0}, {10, 0}, p);
  ASSERT_EQ(seg.size(), 21u);
  for (std::size_t i = 0; i < seg.size(); ++i) {
    EXPECT_NEAR(seg[i].r.x(), 0.5 * i, 1e-12);
    EXPECT_EQ(seg[i].psi, 0.0);
  }
  seg = line_segment({0, 0}, {0, -3}, p);
  EXPECT_NEAR(seg.front().psi, -kPi / 2, 1e-15);
  seg = line_segment({0, 0}, {3, 4}, p);
  EXPECT_NEAR(seg.back().t, 1.0, 1e-15);
  EXPECT_EQ(seg.back().r, Eigen::Vector2d(3, 4));
  EXPECT_THROW(line_segment({1, 1}, {1, 1}, p), ParamError);
}

TEST(CCTurn, ProfileWithArc) {
  const PlannerParams p{1.0, 0.5, 0.25, 0.01};
  const double delta = 2 * p.clothoid_heading() + 1.0;
  const auto turn = cc_turn({0, 0, 0.2}, delta, -1, p);
  const auto& w = turn.waypoints;
  const double t_cs = p.clothoid_duration();
  EXPECT_NEAR(w.w_cs.t, t_cs, 1e-12);
  EXPECT_NEAR(w.w_ce.t - w.w_cs.t, 1.0 / (p.v * p.kappa_max), 1e-12);
  EXPECT_NEAR(w.w_e.t - w.w_ce.t, t_cs, 1e-12);
  EXPECT_EQ(w.kappa_peak, p.kappa_max);
  for (const auto& s : turn.samples) {
    double expected;
    if (s.t <= w.w_cs.t) {
      expected = p.sigma_max * s.t;
    } else if (s.t <= w.w_ce.t) {
      expected = p.kappa_max;
    } else {
      expected = p.kappa_max - p.sigma_max * (s.t - w.w_ce.t);
    }
    EXPECT_NEAR(s.kappa, expected, 1e-12) << "t = " << s.t;
    // Mirrored about the time midpoint.
    const double mirror = w.w_e.t - s.t;
    const double mirrored = mirror <= t_cs ? p.sigma_max * mirror
                            : mirror <= w.w_ce.t ? p.kappa_max
                                                 : p.kappa_max - p.sigma_max * (mirror - w.w_ce.t);
    EXPECT_NEAR(s.kappa, mirrored, 1e-12);
  }
  EXPECT_NEAR(angle_diff(turn.samples.back().psi, 0.2 + delta), 0.0, 1e-12);
}

TEST(CCTurn, BoundaryHasNoArc) {
  const PlannerParams p{1.0, 0.5, 0.25, 0.01};
  const auto turn = cc_turn({0, 0, 0}, 2 * p.clothoid_heading(), 1, p);
  EXPECT_EQ(turn.waypoints.w_cs.t, turn.waypoints.w_ce.t);
  for (const auto& s : turn.samples) EXPECT_NE(s.kind, SegmentKind::kArc);
  EXPECT_NEAR(turn.waypoints.kappa_peak, p.kappa_max, 1e-15);
}

TEST(CCTurn, SmallTurnReducesPeak) {
  const PlannerParams p = regression_params();
  const double delta = 0.3;
  ASSERT_LT(delta, 2 * p.clothoid_heading());
  const auto turn = cc_turn({0, 0, 0}, delta, 1, p);
  EXPECT_NEAR(turn.waypoints.kappa_peak, std::sqrt(delta * p.sigma_max / p.v), 1e-15);
  EXPECT_NEAR(angle_diff(turn.samples.back().psi, -delta), 0.0, 1e-12);
  for (const auto& s : turn.samples) EXPECT_LE(std::abs(s.kappa), turn.waypoints.kappa_peak + 1e-15);
}

TEST(CCTurn, HeadingChangeForRandomDeltas) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> uni(0.01, 2 * kPi);
  const PlannerParams p{2.0, 1.0, 0.8, 0.01};
  for (int i = 0; i < 100; ++i) {
    const double delta = uni(rng);
    const int d_c = i % 2 ? 1 : -1;
    const auto turn = cc_turn({1, -1, 0.4}, delta, d_c, p);
    // Heading integral v * sum(kappa dt) by the trapezoid rule is exact for
    // piecewise-linear curvature sampled at its breakpoints.
    double integral = 0.0;
    for (std::size_t k = 0; k + 1 < turn.samples.size(); ++k) {
      const auto& a = turn.samples[k];
      const auto& b = turn.samples[k + 1];
      integral += 0.5 * (a.kappa + b.kappa) * (b.t - a.t) * p.v;
    }
    EXPECT_NEAR(integral, -d_c * delta, 1e-9);
    EXPECT_NEAR(angle_diff(turn.samples.back().psi, 0.4 - d_c * delta), 0.0, 1e-9);
  }
}

TEST(CCTurn, Validation) {
  EXPECT_THROW(cc_turn({0, 0, 0}, -0.1, 1, regression_params()), ParamError);
  EXPECT_THROW(cc_turn({0, 0, 0}, 0.1, 2, regression_params()), ParamError);
  EXPECT_THROW(cc_turn({0, 0, 0}, 1e-30, 1, regression_params()), TurnTooTight);
}

TEST(ConnectWaypoints, AlignedIsSingleLine) {
  const auto traj = connect_waypoints({{0, 0, 0.5}, {std::cos(0.5) * 10, std::sin(0.5) * 10, 0.5}},
                                      regression_params());
  ASSERT_EQ(traj.segments().size(), 1u);
  EXPECT_EQ(traj.segments()[0].kind, SegmentKind::kLine);
  EXPECT_NEAR(traj.duration(), 2.0, 1e-12);
}

TEST(ConnectWaypoints, RegressionScenario) {
  const auto traj = connect_waypoints(kRegressionWaypoints, regression_params());
  const auto [pos, psi] = testing::waypoint_errors(traj, kRegressionWaypoints);
  EXPECT_LT(pos, 1e-3);
  EXPECT_LT(psi, 1e-3);
  const auto c = check_plan(traj);
  EXPECT_LE(c.max_abs_kappa, 2.7 * (1 + 1e-12));
  EXPECT_LE(c.max_kappa_rate, 0.17 * (1 + 1e-6));
  EXPECT_LT(c.max_spacing_error, 1e-3);
  EXPECT_LT(c.max_turn_asymmetry, 1e-6);
  EXPECT_LT(c.max_joint_position_gap, 1e-9);
  EXPECT_LT(c.max_joint_heading_gap, 1e-9);
  EXPECT_LT(c.max_joint_kappa_gap, 1e-9);
  EXPECT_LT(c.max_flat_mismatch, 1e-6);
  // Ends exactly at the last waypoint.
  EXPECT_EQ(traj.samples().back().r, Eigen::Vector2d(50, 0));
}

TEST(ConnectWaypoints, ErrorsNameWaypoints) {
  try {
    connect_waypoints({{0, 0, 0}, {10, 0, 0}, {10, 0, 1}}, regression_params());
    FAIL() << "expected InfeasibleError";
  } catch (const InfeasibleError& e) {
    EXPECT_EQ(e.from_index(), 1u);
    EXPECT_EQ(e.to_index(), 2u);
    EXPECT_NE(std::string(e.what()).find("waypoints 1 and 2"), std::string::npos);
  }
  EXPECT_THROW(connect_waypoints({{0, 0, 0}}, regression_params()), ParamError);
  EXPECT_THROW(connect_waypoints({{0, 0, 0}, {1, NAN, 0}}, regression_params()), ParamError);
}

// Reflection y -> -y maps the plan onto its mirror image sample by sample.
TEST(ConnectWaypoints, MirrorSymmetry) {
  const PlannerParams p{3.0, 0.8, 0.4, 0.01};
  const std::vector<Waypoint> wps = {{0, 0, 0.3}, {25, 8, 2.0}, {40, -5, -0.7}};
  std::vector<Waypoint> mirrored;
  for (const auto& w : wps) mirrored.push_back({w.x, -w.y, -w.psi});
  const auto a = connect_waypoints(wps, p);
  const auto b = connect_waypoints(mirrored, p);
  ASSERT_EQ(a.samples().size(), b.samples().size());
  for (std::size_t i = 0; i < a.samples().size(); ++i) {
    const auto& sa = a.samples()[i];
    const auto& sb = b.samples()[i];
    ASSERT_NEAR(sa.t, sb.t, 1e-9);
    ASSERT_NEAR(sa.r.x(), sb.r.x(), 1e-6);
    ASSERT_NEAR(sa.r.y(), -sb.r.y(), 1e-6);
    ASSERT_NEAR(sa.kappa, -sb.kappa, 1e-9);
  }
}

// Reversing the waypoint order (headings flipped) retraces the same path
// backwards in time.
TEST(ConnectWaypoints, ReversedOrderRetracesPath) {
  const PlannerParams p{3.0, 0.8, 0.4, 0.01};
  const std::vector<Waypoint> wps = {{-20, 0, 0.4}, {0, 6, 0.0}, {20, 0, -0.4}};
  std::vector<Waypoint> reversed;
  for (auto it = wps.rbegin(); it != wps.rend(); ++it) {
    reversed.push_back({it->x, it->y, wrap_angle(it->psi + kPi)});
  }
  const auto a = connect_waypoints(wps, p);
  const auto b = connect_waypoints(reversed, p);
  ASSERT_NEAR(a.duration(), b.duration(), 1e-9);
  const double total = a.duration();
  for (double t = 0.0; t <= total; t += total / 97) {
    const auto ra = a.evaluate(t).r;
    const auto rb = b.evaluate(std::max(0.0, total - t)).r;
    ASSERT_LT((ra - rb).norm(), 1e-6) << "t = " << t;
  }
}

TEST(AnnotateDerivatives, StraightAndCircle) {
  const PlannerParams p{2.0, 0.5, 0.5, 0.01};
  const auto line = connect_waypoints({{0, 0, 0}, {5, 0, 0}}, p);
  for (const auto& s : line.samples()) {
    EXPECT_EQ(s.r_ddot.norm(), 0.0);
    EXPECT_EQ(s.r_dddot.norm(), 0.0);
  }
  const auto traj = connect_waypoints({{0, 0, 0}, {0, 40, kPi}}, p);
  bool saw_arc = false;
  for (const auto& s : traj.samples()) {
    if (s.kind != SegmentKind::kArc) continue;
    saw_arc = true;
    EXPECT_NEAR(s.r_ddot.norm(), p.v * p.v * p.kappa_max, 1e-12);
  }
  EXPECT_TRUE(saw_arc);
}

TEST(AnnotateDerivatives, MatchFiniteDifferences) {
  const auto traj = connect_waypoints(kRegressionWaypoints, regression_params());
  const auto& s = traj.samples();
  const double v = traj.params().v;
  for (std::size_t i = 1; i + 1 < s.size(); ++i) {
    const double h1 = s[i].t - s[i - 1].t, h2 = s[i + 1].t - s[i].t;
    if (std::abs(h1 - h2) > 1e-9) continue;  // residual gaps
    const Eigen::Vector2d vel = (s[i + 1].r - s[i - 1].r) / (h1 + h2);
    EXPECT_LT((vel - s[i].r_dot).norm(), 1e-3 * v) << i;
    const Eigen::Vector2d acc = (s[i + 1].r_dot - s[i - 1].r_dot) / (h1 + h2);
    EXPECT_LT((acc - s[i].r_ddot).norm(), 1e-3 * v * std::max(1.0, s[i].r_ddot.norm())) << i;
  }
}

TEST(CCTrajectory, EvaluateHitsSamples) {
  const auto traj = connect_waypoints(kRegressionWaypoints, regression_params());
  for (std::size_t i = 0; i < traj.samples().size(); i += 37) {
    const auto& s = traj.samples()[i];
    const auto d = traj.evaluate(s.t);
    EXPECT_EQ(d.r, s.r);
    EXPECT_EQ(d.r_dot, s.r_dot);
  }
  EXPECT_THROW(traj.evaluate(-1.0), ParamError);
  EXPECT_THROW(traj.evaluate(traj.duration() + 1.0), ParamError);
}

}  // namespace
}  // namespace epstraj
