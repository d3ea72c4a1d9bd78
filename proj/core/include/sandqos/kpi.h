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

// Robot-control KPIs extracted from a planned trajectory and a pose log.

#ifndef SANDQOS_KPI_H_
#define SANDQOS_KPI_H_

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "absl/status/statusor.h"
#include "sandqos/path.h"

namespace sandqos {

enum class Phase { kScanning, kSanding };

std::string_view PhaseName(Phase phase);
absl::StatusOr<Phase> ParsePhase(std::string_view name);

struct RobotKpis {
  double traj_err_mean = 0.0;  // mm
  double traj_err_max = 0.0;   // mm
  double vel_mean = 0.0;       // mm/s
  double vel_max = 0.0;
  double vel_min = 0.0;
  double vel_std = 0.0;
  double z_dev_mean = 0.0;  // mm
  double z_dev_max = 0.0;
  double orient_err_rms = 0.0;  // rad
  Phase phase = Phase::kSanding;

  friend bool operator==(const RobotKpis&, const RobotKpis&) = default;
};

// Numeric KPI fields in declaration order, by name.
const std::vector<std::string>& KpiNames();
absl::StatusOr<double> KpiValue(const RobotKpis& kpis, std::string_view name);
absl::Status SetKpiValue(RobotKpis& kpis, std::string_view name, double value);

struct MeanMax {
  double mean = 0.0;
  double max = 0.0;
};

struct VelocityStats {
  double mean = 0.0;
  double max = 0.0;
  double min = 0.0;
  double std = 0.0;
};

// XY distance from each sample to the planned polyline.
absl::StatusOr<MeanMax> TrajectoryError(const PlannedTrajectory& plan,
                                        const TrajectoryLog& log);

// Statistics of per-interval 3-D speed (displacement / dt).
absl::StatusOr<VelocityStats> ComputeVelocityStats(const TrajectoryLog& log);

absl::StatusOr<MeanMax> ZDistance(const TrajectoryLog& log, double z_ref);

// RMS angle between the tool axis and the surface normal (+z).
absl::StatusOr<double> OrientationError(const TrajectoryLog& log);

// Angle between the rotated tool axis and +z for Z-Y-X (yaw, pitch, roll)
// Euler angles. Yaw spins the tool about its own axis and does not tilt it.
double TiltAngle(double roll, double pitch);

// Geometry KPIs from the spatial log, velocity from the time-uniform one.
absl::StatusOr<RobotKpis> ComputeKpis(const PlannedTrajectory& plan,
                                      const TrajectoryLog& spatial,
                                      const TrajectoryLog& timed, Phase phase);

absl::Status ValidateKpis(const RobotKpis& kpis);

}  // namespace sandqos

#endif  // SANDQOS_KPI_H_
