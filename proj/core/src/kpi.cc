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

#include "sandqos/kpi.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "absl/strings/str_cat.h"

namespace sandqos {
namespace {

double PointSegmentDistance(Point2 p, Point2 a, Point2 b) {
  const double dx = b.x - a.x;
  const double dy = b.y - a.y;
  const double len2 = dx * dx + dy * dy;
  double u = len2 > 0.0 ? ((p.x - a.x) * dx + (p.y - a.y) * dy) / len2 : 0.0;
  u = std::clamp(u, 0.0, 1.0);
  return std::hypot(p.x - (a.x + u * dx), p.y - (a.y + u * dy));
}

double* Field(RobotKpis& k, std::string_view name) {
  if (name == "traj_err_mean") return &k.traj_err_mean;
  if (name == "traj_err_max") return &k.traj_err_max;
  if (name == "vel_mean") return &k.vel_mean;
  if (name == "vel_max") return &k.vel_max;
  if (name == "vel_min") return &k.vel_min;
  if (name == "vel_std") return &k.vel_std;
  if (name == "z_dev_mean") return &k.z_dev_mean;
  if (name == "z_dev_max") return &k.z_dev_max;
  if (name == "orient_err_rms") return &k.orient_err_rms;
  return nullptr;
}

}  // namespace

std::string_view PhaseName(Phase phase) {
  return phase == Phase::kScanning ? "scanning" : "sanding";
}

absl::StatusOr<Phase> ParsePhase(std::string_view name) {
  if (name == "scanning") return Phase::kScanning;
  if (name == "sanding") return Phase::kSanding;
  return absl::InvalidArgumentError(
      absl::StrCat("unknown phase '", std::string(name), "'"));
}

const std::vector<std::string>& KpiNames() {
  static const std::vector<std::string> kNames = {
      "traj_err_mean", "traj_err_max", "vel_mean",   "vel_max",
      "vel_min",       "vel_std",      "z_dev_mean", "z_dev_max",
      "orient_err_rms"};
  return kNames;
}

absl::StatusOr<double> KpiValue(const RobotKpis& kpis, std::string_view name) {
  RobotKpis copy = kpis;
  const double* f = Field(copy, name);
  if (f == nullptr) {
    return absl::NotFoundError(
        absl::StrCat("unknown KPI '", std::string(name), "'"));
  }
  return *f;
}

absl::Status SetKpiValue(RobotKpis& kpis, std::string_view name,
                         double value) {
  double* f = Field(kpis, name);
  if (f == nullptr) {
    return absl::NotFoundError(
        absl::StrCat("unknown KPI '", std::string(name), "'"));
  }
  *f = value;
  return absl::OkStatus();
}

absl::StatusOr<MeanMax> TrajectoryError(const PlannedTrajectory& plan,
                                        const TrajectoryLog& log) {
  if (plan.waypoints.empty()) {
    return absl::InvalidArgumentError("plan has no waypoints");
  }
  if (log.samples.empty()) {
    return absl::InvalidArgumentError("trajectory log is empty");
  }
  const auto& wp = plan.waypoints;
  MeanMax out;
  double sum = 0.0;
  for (const Pose& s : log.samples) {
    const Point2 p{s.x, s.y};
    double best = std::hypot(p.x - wp[0].x, p.y - wp[0].y);
    for (size_t i = 0; i + 1 < wp.size(); ++i) {
      best = std::min(best, PointSegmentDistance(p, wp[i], wp[i + 1]));
    }
    sum += best;
    out.max = std::max(out.max, best);
  }
  out.mean = std::min(out.max, sum / static_cast<double>(log.samples.size()));
  return out;
}

absl::StatusOr<VelocityStats> ComputeVelocityStats(const TrajectoryLog& log) {
  if (log.samples.size() < 2) {
    return absl::InvalidArgumentError("velocity needs at least two samples");
  }
  VelocityStats out;
  out.min = std::numeric_limits<double>::infinity();
  double sum = 0.0;
  double sum_sq = 0.0;
  const size_t n = log.samples.size() - 1;
  for (size_t i = 0; i < n; ++i) {
    const Pose& a = log.samples[i];
    const Pose& b = log.samples[i + 1];
    const double dt = b.t - a.t;
    if (!(dt > 0.0)) {
      return absl::InvalidArgumentError(
          absl::StrCat("timestamps not increasing at sample ", i + 1));
    }
    const double dx = b.x - a.x;
    const double dy = b.y - a.y;
    const double dz = b.z - a.z;
    const double v = std::sqrt(dx * dx + dy * dy + dz * dz) / dt;
    sum += v;
    sum_sq += v * v;
    out.max = std::max(out.max, v);
    out.min = std::min(out.min, v);
  }
  out.mean = sum / static_cast<double>(n);
  const double var = sum_sq / static_cast<double>(n) - out.mean * out.mean;
  out.std = std::sqrt(std::max(0.0, var));
  // Rounding can push the mean a hair outside [min, max] for constant speed.
  out.mean = std::clamp(out.mean, out.min, out.max);
  return out;
}

absl::StatusOr<MeanMax> ZDistance(const TrajectoryLog& log, double z_ref) {
  if (log.samples.empty()) {
    return absl::InvalidArgumentError("trajectory log is empty");
  }
  MeanMax out;
  double sum = 0.0;
  for (const Pose& p : log.samples) {
    const double d = std::abs(p.z - z_ref);
    sum += d;
    out.max = std::max(out.max, d);
  }
  out.mean = std::min(out.max, sum / static_cast<double>(log.samples.size()));
  return out;
}

double TiltAngle(double roll, double pitch) {
  // z component of Rz(yaw) * Ry(pitch) * Rx(roll) * e_z; yaw drops out.
  const double c = std::clamp(std::cos(roll) * std::cos(pitch), -1.0, 1.0);
  return std::acos(c);
}

absl::StatusOr<double> OrientationError(const TrajectoryLog& log) {
  if (log.samples.empty()) {
    return absl::InvalidArgumentError("trajectory log is empty");
  }
  double sum_sq = 0.0;
  for (const Pose& p : log.samples) {
    const double a = TiltAngle(p.roll, p.pitch);
    sum_sq += a * a;
  }
  return std::sqrt(sum_sq / static_cast<double>(log.samples.size()));
}

absl::StatusOr<RobotKpis> ComputeKpis(const PlannedTrajectory& plan,
                                      const TrajectoryLog& spatial,
                                      const TrajectoryLog& timed,
                                      Phase phase) {
  RobotKpis k;
  k.phase = phase;
  absl::StatusOr<MeanMax> err = TrajectoryError(plan, spatial);
  if (!err.ok()) return err.status();
  absl::StatusOr<VelocityStats> vel = ComputeVelocityStats(timed);
  if (!vel.ok()) return vel.status();
  absl::StatusOr<MeanMax> z = ZDistance(spatial, plan.z_ref);
  if (!z.ok()) return z.status();
  absl::StatusOr<double> orient = OrientationError(spatial);
  if (!orient.ok()) return orient.status();
  k.traj_err_mean = err->mean;
  k.traj_err_max = err->max;
  k.vel_mean = vel->mean;
  k.vel_max = vel->max;
  k.vel_min = vel->min;
  k.vel_std = vel->std;
  k.z_dev_mean = z->mean;
  k.z_dev_max = z->max;
  k.orient_err_rms = *orient;
  return k;
}

absl::Status ValidateKpis(const RobotKpis& kpis) {
  for (const std::string& name : KpiNames()) {
    const double v = *KpiValue(kpis, name);
    if (!std::isfinite(v) || v < 0.0) {
      return absl::InvalidArgumentError(
          absl::StrCat("KPI ", name, " must be finite and >= 0"));
    }
  }
  if (!(kpis.vel_min <= kpis.vel_mean && kpis.vel_mean <= kpis.vel_max)) {
    return absl::InvalidArgumentError("expected vel_min <= vel_mean <= vel_max");
  }
  if (kpis.traj_err_mean > kpis.traj_err_max) {
    return absl::InvalidArgumentError("traj_err_mean exceeds traj_err_max");
  }
  if (kpis.z_dev_mean > kpis.z_dev_max) {
    return absl::InvalidArgumentError("z_dev_mean exceeds z_dev_max");
  }
  return absl::OkStatus();
}

}  // namespace sandqos
