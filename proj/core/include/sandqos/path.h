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

// Raster path planning and closed-loop tracking of the plan through an
// emulated network channel.

#ifndef SANDQOS_PATH_H_
#define SANDQOS_PATH_H_

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "sandqos/netchan.h"

namespace sandqos {

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point2&, const Point2&) = default;
};

// Tool pose; lengths in mm, angles in rad, time in s.
struct Pose {
  double t = 0.0;
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double roll = 0.0;
  double pitch = 0.0;
  double yaw = 0.0;

  friend bool operator==(const Pose&, const Pose&) = default;
};

struct PlannedTrajectory {
  std::vector<Point2> waypoints;
  double z_ref = 0.0;           // mm
  double nominal_speed = 100.0;  // mm/s
  double tool_radius = 12.5;    // mm
};

absl::Status ValidatePlan(const PlannedTrajectory& plan);

struct TrajectoryLog {
  std::vector<Pose> samples;
  double resolution = 0.5;  // mm
};

struct ControllerParams {
  double control_rate_hz = 100.0;
  double gain = 5.0;          // 1/s
  double max_speed = 300.0;   // mm/s
  double max_accel = 2000.0;  // mm/s^2
  // Defaults to tool_radius when unset.
  std::optional<double> waypoint_capture_radius;
  double z_compliance = 1e-4;  // mm per mm/s^2
  double orientation_noise_std = 0.01;  // rad
};

absl::Status ValidateController(const ControllerParams& ctrl);

struct SimulationOptions {
  // Also route pose reports through a channel with the same conditions.
  bool symmetric_delay = false;
  size_t command_payload_bytes = 64;
  double resolution_mm = 0.5;
};

struct FollowResult {
  // Spatially resampled log, one sample per `resolution` of travel.
  TrajectoryLog log;
  // One sample per control tick.
  TrajectoryLog timed;
  bool complete = false;
  uint64_t commands_sent = 0;
  uint64_t commands_dropped = 0;
};

// Boustrophedon raster over [0, width] x [0, height]. Lanes run the full
// length of the long axis; lane centres are spread evenly between
// tool_radius and (short side - tool_radius) with spacing at most
// 2 * tool_radius * (1 - overlap).
absl::StatusOr<PlannedTrajectory> PlanRaster(double width, double height,
                                             double tool_radius,
                                             double overlap,
                                             double nominal_speed = 100.0,
                                             double z_ref = 0.0);

// PlanRaster over the rectangle grown by `overtravel` mm on every side, in
// the coordinates of the original rectangle. Lane ends and turns then fall
// outside [0, width] x [0, height].
absl::StatusOr<PlannedTrajectory> PlanRasterWithOvertravel(
    double width, double height, double tool_radius, double overlap,
    double overtravel, double nominal_speed = 100.0, double z_ref = 0.0);

// Lane spacing before the even spread is applied.
double NominalLaneSpacing(double tool_radius, double overlap);

// Number of lanes PlanRaster emits for a short side of `short_side` mm.
int LaneCount(double short_side, double tool_radius, double overlap);

// Runs the remote velocity-control loop against a kinematic plant.
//
// Each tick the controller reads the plant pose, commands
//   v = ff + gain * (reference - pose)
// saturated at max_speed and rate-limited by max_accel, and sends it through
// the channel. The reference moves along the current segment with a
// trapezoidal profile that starts and ends at rest; the next segment begins
// once the profile has finished and the tool lies within the capture radius
// of the segment end. The plant integrates the most recently delivered
// command exactly between delivery instants.
//
// Running out of time is not an error: the result comes back with
// complete == false.
absl::StatusOr<FollowResult> SimulateFollow(
    const PlannedTrajectory& plan, const ControllerParams& ctrl,
    const NetworkConditions& cond, double duration_limit_s,
    const SimulationOptions& options = {});

// Writes "t,x,y,z,roll,pitch,yaw" followed by one row per sample.
void WriteTrajectoryCsv(const TrajectoryLog& log, std::ostream& os);
absl::StatusOr<TrajectoryLog> ReadTrajectoryCsv(std::istream& is,
                                                double resolution);

void WritePlanCsv(const PlannedTrajectory& plan, std::ostream& os);

}  // namespace sandqos

#endif  // SANDQOS_PATH_H_
