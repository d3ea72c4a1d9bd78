// Copyright 2026 The sandqos Authors
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

#include "sandqos/path.h"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "gtest/gtest.h"
#include "sandqos/kpi.h"
#include "sandqos/stats.h"
#include "support/test_util.h"

namespace sandqos {
namespace {

double SegmentDistance(Point2 p, Point2 a, Point2 b) {
  const double dx = b.x - a.x;
  const double dy = b.y - a.y;
  double u = ((p.x - a.x) * dx + (p.y - a.y) * dy) / (dx * dx + dy * dy);
  u = std::clamp(u, 0.0, 1.0);
  return std::hypot(p.x - a.x - u * dx, p.y - a.y - u * dy);
}

double DistanceToPlan(const PlannedTrajectory& plan, Point2 p) {
  double best = 1e300;
  for (size_t i = 0; i + 1 < plan.waypoints.size(); ++i) {
    best = std::min(best,
                    SegmentDistance(p, plan.waypoints[i], plan.waypoints[i + 1]));
  }
  return best;
}

NetworkConditions Delay(double ms, uint64_t seed = 1) {
  NetworkConditions c;
  c.delay_ms = ms;
  c.seed = seed;
  return c;
}

PlannedTrajectory DefaultRaster() {
  return *PlanRasterWithOvertravel(200.0, 100.0, 12.5, 0.5, 25.0);
}

double MaxError(const PlannedTrajectory& plan, const FollowResult& r) {
  return TrajectoryError(plan, r.log)->max;
}

TEST(PlanRasterTest, TwoLanesFiftyApartOnTwoHundredByHundred) {
  ASSERT_OK_AND_ASSIGN(PlannedTrajectory plan,
                       PlanRaster(200.0, 100.0, 25.0, 0.0));
  EXPECT_DOUBLE_EQ(NominalLaneSpacing(25.0, 0.0), 50.0);
  ASSERT_EQ(plan.waypoints.size(), 4u);
  const std::vector<Point2> want = {
      {0.0, 25.0}, {200.0, 25.0}, {200.0, 75.0}, {0.0, 75.0}};
  EXPECT_EQ(plan.waypoints, want);
  EXPECT_EQ(plan.tool_radius, 25.0);
}

TEST(PlanRasterTest, LanesFollowTheLongAxis) {
  ASSERT_OK_AND_ASSIGN(PlannedTrajectory plan,
                       PlanRaster(100.0, 200.0, 25.0, 0.0));
  ASSERT_EQ(plan.waypoints.size(), 4u);
  EXPECT_EQ(plan.waypoints[0], (Point2{25.0, 0.0}));
  EXPECT_EQ(plan.waypoints[1], (Point2{25.0, 200.0}));
  EXPECT_EQ(plan.waypoints[3], (Point2{75.0, 0.0}));
}

TEST(PlanRasterTest, LaneCountsScaleInverselyWithToolRadius) {
  // 150 mm short side: 150 / 25 = 6 lanes against 150 / 75 = 2.
  EXPECT_EQ(LaneCount(150.0, 12.5, 0.0), 6);
  EXPECT_EQ(LaneCount(150.0, 37.5, 0.0), 2);
  ASSERT_OK_AND_ASSIGN(PlannedTrajectory small,
                       PlanRaster(300.0, 150.0, 12.5, 0.0));
  ASSERT_OK_AND_ASSIGN(PlannedTrajectory large,
                       PlanRaster(300.0, 150.0, 37.5, 0.0));
  EXPECT_EQ(small.waypoints.size(), 3 * large.waypoints.size());
}

TEST(PlanRasterTest, LaneSpacingNeverExceedsNominal) {
  for (double r : {5.0, 12.5, 25.0, 37.5}) {
    for (double overlap : {0.0, 0.25, 0.5, 0.9}) {
      ASSERT_OK_AND_ASSIGN(PlannedTrajectory plan,
                           PlanRaster(400.0, 230.0, r, overlap));
      for (size_t i = 2; i < plan.waypoints.size(); i += 2) {
        const double gap = plan.waypoints[i].y - plan.waypoints[i - 1].y;
        EXPECT_LE(gap, NominalLaneSpacing(r, overlap) + 1e-9);
        EXPECT_GT(gap, 0.0);
      }
    }
  }
}

TEST(PlanRasterTest, EveryCellWithinToolRadiusOfThePath) {
  struct Case {
    double w, h, r, overlap;
  };
  for (const Case& c : {Case{200, 100, 12.5, 0.0}, Case{200, 100, 25, 0.0},
                        Case{200, 100, 37.5, 0.0}, Case{200, 100, 12.5, 0.5},
                        Case{137, 211, 20, 0.1}, Case{90, 60, 14, 0.3}}) {
    ASSERT_OK_AND_ASSIGN(PlannedTrajectory plan,
                         PlanRaster(c.w, c.h, c.r, c.overlap));
    for (double y = 0.5; y < c.h; y += 1.0) {
      for (double x = 0.5; x < c.w; x += 1.0) {
        ASSERT_LE(DistanceToPlan(plan, {x, y}), c.r + 1e-9)
            << "cell (" << x << ", " << y << ") r=" << c.r;
      }
    }
  }
}

TEST(PlanRasterTest, RejectsInvalidInputs) {
  EXPECT_FALSE(PlanRaster(40.0, 100.0, 25.0, 0.0).ok());
  EXPECT_FALSE(PlanRaster(200.0, 50.0, 25.0, 0.0).ok());
  EXPECT_FALSE(PlanRaster(200.0, 100.0, 0.0, 0.0).ok());
  EXPECT_FALSE(PlanRaster(200.0, 100.0, 10.0, 1.0).ok());
  EXPECT_FALSE(PlanRaster(200.0, 100.0, 10.0, -0.1).ok());
  EXPECT_FALSE(PlanRaster(200.0, 100.0, 10.0, 0.0, 0.0).ok());
}

TEST(PlanRasterTest, OvertravelShiftsTheGrownRaster) {
  ASSERT_OK_AND_ASSIGN(PlannedTrajectory base,
                       PlanRaster(250.0, 150.0, 12.5, 0.5));
  ASSERT_OK_AND_ASSIGN(PlannedTrajectory over,
                       PlanRasterWithOvertravel(200.0, 100.0, 12.5, 0.5, 25.0));
  ASSERT_EQ(base.waypoints.size(), over.waypoints.size());
  for (size_t i = 0; i < base.waypoints.size(); ++i) {
    EXPECT_DOUBLE_EQ(over.waypoints[i].x, base.waypoints[i].x - 25.0);
    EXPECT_DOUBLE_EQ(over.waypoints[i].y, base.waypoints[i].y - 25.0);
  }
  EXPECT_EQ(over.waypoints.front(), (Point2{-25.0, -12.5}));
  EXPECT_FALSE(PlanRasterWithOvertravel(200, 100, 12.5, 0.5, -1.0).ok());
  EXPECT_FALSE(PlanRasterWithOvertravel(20, 100, 12.5, 0.5, 25.0).ok());
}

TEST(ValidatePlanTest, RejectsDegeneratePlans) {
  PlannedTrajectory plan;
  plan.waypoints = {{0, 0}};
  EXPECT_FALSE(ValidatePlan(plan).ok());
  plan.waypoints = {{0, 0}, {0, 0}};
  EXPECT_FALSE(ValidatePlan(plan).ok());
  plan.waypoints = {{0, 0}, {1, 0}};
  EXPECT_OK(ValidatePlan(plan));
  plan.tool_radius = 0.0;
  EXPECT_FALSE(ValidatePlan(plan).ok());
}

TEST(SimulateFollowTest, RejectsInvalidController) {
  ControllerParams ctrl;
  ctrl.gain = 0.0;
  EXPECT_FALSE(SimulateFollow(DefaultRaster(), ctrl, Delay(0), 10.0).ok());
  ctrl = ControllerParams{};
  ctrl.waypoint_capture_radius = -1.0;
  EXPECT_FALSE(SimulateFollow(DefaultRaster(), ctrl, Delay(0), 10.0).ok());
  ctrl = ControllerParams{};
  ctrl.orientation_noise_std = -0.1;
  EXPECT_FALSE(SimulateFollow(DefaultRaster(), ctrl, Delay(0), 10.0).ok());
  EXPECT_FALSE(
      SimulateFollow(DefaultRaster(), ControllerParams{}, Delay(0), 0.0).ok());
}

TEST(SimulateFollowTest, StraightLineWithoutDelayTracksClosely) {
  PlannedTrajectory plan;
  plan.waypoints = {{0.0, 0.0}, {300.0, 40.0}};
  ControllerParams ctrl;
  ctrl.max_speed = 1000.0;
  ASSERT_OK_AND_ASSIGN(FollowResult r,
                       SimulateFollow(plan, ctrl, Delay(0), 60.0));
  EXPECT_TRUE(r.complete);
  EXPECT_LT(MaxError(plan, r), 0.1);
  EXPECT_EQ(r.commands_dropped, 0u);
}

TEST(SimulateFollowTest, SixtySixMsOvershootsTurns) {
  const PlannedTrajectory plan = DefaultRaster();
  ASSERT_OK_AND_ASSIGN(FollowResult fast,
                       SimulateFollow(plan, ControllerParams{}, Delay(0), 600));
  ASSERT_OK_AND_ASSIGN(FollowResult slow,
                       SimulateFollow(plan, ControllerParams{}, Delay(66), 600));
  EXPECT_TRUE(fast.complete);
  EXPECT_TRUE(slow.complete);
  EXPECT_GT(MaxError(plan, slow), 5.0 * MaxError(plan, fast));
}

TEST(SimulateFollowTest, IdenticalInputsGiveBitIdenticalLogs) {
  const PlannedTrajectory plan = DefaultRaster();
  NetworkConditions c = Delay(30, 42);
  c.jitter_ms = 10.0;
  c.loss_rate = 0.05;
  ASSERT_OK_AND_ASSIGN(FollowResult a,
                       SimulateFollow(plan, ControllerParams{}, c, 600));
  ASSERT_OK_AND_ASSIGN(FollowResult b,
                       SimulateFollow(plan, ControllerParams{}, c, 600));
  EXPECT_EQ(a.log.samples, b.log.samples);
  EXPECT_EQ(a.timed.samples, b.timed.samples);
  EXPECT_EQ(a.commands_dropped, b.commands_dropped);
  c.seed = 43;
  ASSERT_OK_AND_ASSIGN(FollowResult other,
                       SimulateFollow(plan, ControllerParams{}, c, 600));
  EXPECT_NE(a.log.samples, other.log.samples);
}

void ExpectSpeedBound(const TrajectoryLog& log, double max_speed) {
  for (size_t i = 1; i < log.samples.size(); ++i) {
    const Pose& a = log.samples[i - 1];
    const Pose& b = log.samples[i];
    const double v = std::hypot(b.x - a.x, b.y - a.y) / (b.t - a.t);
    ASSERT_LE(v, max_speed * (1.0 + 1e-9) + 1e-9) << "sample " << i;
  }
}

TEST(SimulateFollowTest, SpeedNeverExceedsLimit) {
  ControllerParams ctrl;
  ctrl.max_speed = 120.0;
  for (double delay : {0.0, 40.0, 100.0}) {
    NetworkConditions c = Delay(delay);
    c.jitter_ms = delay / 2;
    ASSERT_OK_AND_ASSIGN(FollowResult r,
                         SimulateFollow(DefaultRaster(), ctrl, c, 600));
    ExpectSpeedBound(r.timed, ctrl.max_speed);
    ExpectSpeedBound(r.log, ctrl.max_speed);
  }
}

TEST(SimulateFollowTest, LogSpacingAndTimestamps) {
  ASSERT_OK_AND_ASSIGN(
      FollowResult r,
      SimulateFollow(DefaultRaster(), ControllerParams{}, Delay(50), 600));
  const TrajectoryLog& log = r.log;
  EXPECT_EQ(log.resolution, 0.5);
  ASSERT_GT(log.samples.size(), 100u);
  for (size_t i = 1; i < log.samples.size(); ++i) {
    const Pose& a = log.samples[i - 1];
    const Pose& b = log.samples[i];
    ASSERT_GT(b.t, a.t);
    ASSERT_LE(std::hypot(b.x - a.x, b.y - a.y), 2.0 * log.resolution + 1e-9);
  }
  for (size_t i = 1; i < r.timed.samples.size(); ++i) {
    ASSERT_NEAR(r.timed.samples[i].t - r.timed.samples[i - 1].t, 0.01, 1e-12);
  }
}

TEST(SimulateFollowTest, DegradationIsMonotoneInDelay) {
  const PlannedTrajectory plan = DefaultRaster();
  std::vector<double> delays;
  std::vector<double> errors;
  for (int d = 0; d <= 100; d += 10) {
    ASSERT_OK_AND_ASSIGN(
        FollowResult r, SimulateFollow(plan, ControllerParams{}, Delay(d), 600));
    delays.push_back(d);
    errors.push_back(MaxError(plan, r));
  }
  ASSERT_OK_AND_ASSIGN(double rho, SpearmanCorrelation(delays, errors));
  EXPECT_GE(rho, 0.9);
}

TEST(SimulateFollowTest, NoComplianceNoNoiseKeepsToolLevel) {
  ControllerParams ctrl;
  ctrl.z_compliance = 0.0;
  ctrl.orientation_noise_std = 0.0;
  PlannedTrajectory plan = DefaultRaster();
  plan.z_ref = 2.5;
  ASSERT_OK_AND_ASSIGN(FollowResult r,
                       SimulateFollow(plan, ctrl, Delay(0), 600));
  for (const TrajectoryLog* log : {&r.log, &r.timed}) {
    for (const Pose& p : log->samples) {
      ASSERT_EQ(p.z, 2.5);
      ASSERT_EQ(p.roll, 0.0);
      ASSERT_EQ(p.pitch, 0.0);
    }
  }
}

TEST(SimulateFollowTest, RunningOutOfTimeFlagsIncomplete) {
  ASSERT_OK_AND_ASSIGN(
      FollowResult r,
      SimulateFollow(DefaultRaster(), ControllerParams{}, Delay(0), 1.0));
  EXPECT_FALSE(r.complete);
  EXPECT_EQ(r.timed.samples.size(), 101u);
}

TEST(SimulateFollowTest, LossyLinkStillCompletes) {
  NetworkConditions c = Delay(10);
  c.loss_rate = 0.3;
  ASSERT_OK_AND_ASSIGN(
      FollowResult r,
      SimulateFollow(DefaultRaster(), ControllerParams{}, c, 600));
  EXPECT_TRUE(r.complete);
  EXPECT_GT(r.commands_dropped, 0u);
  EXPECT_NEAR(static_cast<double>(r.commands_dropped) / r.commands_sent, 0.3,
              0.03);
}

TEST(SimulateFollowTest, SymmetricDelayHurtsMore) {
  const PlannedTrajectory plan = DefaultRaster();
  SimulationOptions sym;
  sym.symmetric_delay = true;
  ASSERT_OK_AND_ASSIGN(
      FollowResult one_way,
      SimulateFollow(plan, ControllerParams{}, Delay(30), 600));
  ASSERT_OK_AND_ASSIGN(
      FollowResult both,
      SimulateFollow(plan, ControllerParams{}, Delay(30), 600, sym));
  EXPECT_GT(MaxError(plan, both), MaxError(plan, one_way));
}

TEST(TrajectoryCsvTest, RoundTripsExactly) {
  ASSERT_OK_AND_ASSIGN(
      FollowResult r,
      SimulateFollow(DefaultRaster(), ControllerParams{}, Delay(20), 600));
  std::stringstream ss;
  WriteTrajectoryCsv(r.log, ss);
  ASSERT_OK_AND_ASSIGN(TrajectoryLog back, ReadTrajectoryCsv(ss, 0.5));
  EXPECT_EQ(back.samples, r.log.samples);
}

TEST(TrajectoryCsvTest, RejectsBadInput) {
  std::istringstream empty("");
  EXPECT_FALSE(ReadTrajectoryCsv(empty, 0.5).ok());
  std::istringstream header("t,x,y\n");
  EXPECT_FALSE(ReadTrajectoryCsv(header, 0.5).ok());
  std::istringstream row("t,x,y,z,roll,pitch,yaw\n1,2,3\n");
  EXPECT_FALSE(ReadTrajectoryCsv(row, 0.5).ok());
  std::istringstream junk("t,x,y,z,roll,pitch,yaw\n1,2,3,4,5,6,abc\n");
  EXPECT_FALSE(ReadTrajectoryCsv(junk, 0.5).ok());
}

}  // namespace
}  // namespace sandqos
