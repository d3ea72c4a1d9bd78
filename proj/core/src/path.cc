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
#include <bit>
#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>

#include "absl/strings/str_cat.h"
#include "sandqos/rng.h"
#include "sandqos/text_format.h"

namespace sandqos {
namespace {

// Reference acceleration as a fraction of the controller's max_accel, which
// leaves headroom for the feedback term.
constexpr double kProfileAccelFraction = 0.5;
constexpr uint64_t kSensingStream = 1;
constexpr uint64_t kPlantStream = 2;

double Norm(double x, double y) { return std::hypot(x, y); }

// Trapezoidal (or triangular) rest-to-rest profile along one segment.
struct SegmentProfile {
  Point2 from;
  Point2 to;
  double dir_x = 0.0;
  double dir_y = 0.0;
  double length = 0.0;
  double accel = 0.0;
  double peak_speed = 0.0;
  double t_accel = 0.0;
  double t_cruise = 0.0;
  double total = 0.0;

  SegmentProfile(Point2 a, Point2 b, double speed, double acc)
      : from(a), to(b), accel(acc) {
    length = Norm(b.x - a.x, b.y - a.y);
    dir_x = (b.x - a.x) / length;
    dir_y = (b.y - a.y) / length;
    if (length >= speed * speed / acc) {
      peak_speed = speed;
      t_accel = speed / acc;
      t_cruise = (length - speed * speed / acc) / speed;
    } else {
      peak_speed = std::sqrt(length * acc);
      t_accel = peak_speed / acc;
      t_cruise = 0.0;
    }
    total = 2.0 * t_accel + t_cruise;
  }

  double Arc(double tau) const {
    if (tau <= 0.0) return 0.0;
    if (tau >= total) return length;
    if (tau < t_accel) return 0.5 * accel * tau * tau;
    const double s_accel = 0.5 * accel * t_accel * t_accel;
    if (tau < t_accel + t_cruise) return s_accel + peak_speed * (tau - t_accel);
    const double rem = total - tau;
    return length - 0.5 * accel * rem * rem;
  }

  Point2 At(double tau) const {
    if (tau >= total) return to;
    const double s = Arc(tau);
    return {from.x + dir_x * s, from.y + dir_y * s};
  }
};

// Distinct experiments get distinct plant-noise realisations; identical
// inputs get identical ones.
uint64_t RunSalt(const PlannedTrajectory& plan, const NetworkConditions& cond,
                 bool symmetric) {
  uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      h ^= (v >> (8 * i)) & 0xff;
      h *= 0x100000001b3ULL;
    }
  };
  mix(std::bit_cast<uint64_t>(cond.delay_ms));
  mix(std::bit_cast<uint64_t>(cond.jitter_ms));
  mix(std::bit_cast<uint64_t>(cond.loss_rate));
  mix(std::bit_cast<uint64_t>(cond.bandwidth_kbps));
  mix(std::bit_cast<uint64_t>(plan.tool_radius));
  mix(symmetric ? 1 : 0);
  return h;
}

// Emits spatial samples at exact multiples of the resolution in travelled
// arc length.
class SpatialSampler {
 public:
  SpatialSampler(TrajectoryLog* log, double resolution)
      : log_(log), resolution_(resolution) {}

  // Straight motion from `start` with velocity (vx, vy) over [t0, t0 + h].
  // `pose_at` fills z and orientation for a time inside the current tick.
  template <typename PoseAt>
  void Move(Point2 start, double vx, double vy, double t0, double h,
            const PoseAt& pose_at) {
    const double speed = Norm(vx, vy);
    if (speed <= 0.0 || h <= 0.0) return;
    double elapsed = 0.0;
    while (true) {
      const double need = resolution_ - travelled_;
      const double dt_need = need / speed;
      if (elapsed + dt_need > h) {
        travelled_ += speed * (h - elapsed);
        return;
      }
      elapsed += dt_need;
      travelled_ = 0.0;
      const double t = t0 + elapsed;
      if (!log_->samples.empty() && t <= log_->samples.back().t) continue;
      log_->samples.push_back(
          pose_at(t, start.x + vx * elapsed, start.y + vy * elapsed));
    }
  }

  double travelled() const { return travelled_; }

 private:
  TrajectoryLog* log_;
  double resolution_;
  double travelled_ = 0.0;
};

struct MotionPiece {
  Point2 start;
  double vx;
  double vy;
  double t0;
  double duration;
};

}  // namespace

absl::Status ValidatePlan(const PlannedTrajectory& plan) {
  if (plan.waypoints.size() < 2) {
    return absl::InvalidArgumentError("plan needs at least two waypoints");
  }
  for (size_t i = 0; i < plan.waypoints.size(); ++i) {
    const Point2& p = plan.waypoints[i];
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
      return absl::InvalidArgumentError(
          absl::StrCat("waypoint ", i, " is not finite"));
    }
    if (i > 0 && p == plan.waypoints[i - 1]) {
      return absl::InvalidArgumentError(
          absl::StrCat("waypoint ", i, " repeats its predecessor"));
    }
  }
  if (!(plan.nominal_speed > 0.0) || !std::isfinite(plan.nominal_speed)) {
    return absl::InvalidArgumentError("nominal_speed must be > 0");
  }
  if (!(plan.tool_radius > 0.0) || !std::isfinite(plan.tool_radius)) {
    return absl::InvalidArgumentError("tool_radius must be > 0");
  }
  if (!std::isfinite(plan.z_ref)) {
    return absl::InvalidArgumentError("z_ref must be finite");
  }
  return absl::OkStatus();
}

absl::Status ValidateController(const ControllerParams& ctrl) {
  auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
  if (!positive(ctrl.control_rate_hz)) {
    return absl::InvalidArgumentError("control_rate_hz must be > 0");
  }
  if (!positive(ctrl.gain)) {
    return absl::InvalidArgumentError("gain must be > 0");
  }
  if (!positive(ctrl.max_speed)) {
    return absl::InvalidArgumentError("max_speed must be > 0");
  }
  if (!positive(ctrl.max_accel)) {
    return absl::InvalidArgumentError("max_accel must be > 0");
  }
  if (ctrl.waypoint_capture_radius.has_value() &&
      !positive(*ctrl.waypoint_capture_radius)) {
    return absl::InvalidArgumentError("waypoint_capture_radius must be > 0");
  }
  if (!std::isfinite(ctrl.z_compliance) || ctrl.z_compliance < 0.0) {
    return absl::InvalidArgumentError("z_compliance must be >= 0");
  }
  if (!std::isfinite(ctrl.orientation_noise_std) ||
      ctrl.orientation_noise_std < 0.0) {
    return absl::InvalidArgumentError("orientation_noise_std must be >= 0");
  }
  return absl::OkStatus();
}

double NominalLaneSpacing(double tool_radius, double overlap) {
  return 2.0 * tool_radius * (1.0 - overlap);
}

int LaneCount(double short_side, double tool_radius, double overlap) {
  const double spacing = NominalLaneSpacing(tool_radius, overlap);
  // Guard against 100/12.5 landing a hair above 8.
  return std::max(
      2, static_cast<int>(std::ceil(short_side / spacing - 1e-9)));
}

absl::StatusOr<PlannedTrajectory> PlanRaster(double width, double height,
                                             double tool_radius,
                                             double overlap,
                                             double nominal_speed,
                                             double z_ref) {
  if (!(tool_radius > 0.0) || !std::isfinite(tool_radius)) {
    return absl::InvalidArgumentError("tool_radius must be > 0");
  }
  if (!(overlap >= 0.0 && overlap < 1.0)) {
    return absl::InvalidArgumentError(
        absl::StrCat("overlap must lie in [0, 1), got ", overlap));
  }
  if (!(width > 2.0 * tool_radius) || !(height > 2.0 * tool_radius) ||
      !std::isfinite(width) || !std::isfinite(height)) {
    return absl::InvalidArgumentError(
        absl::StrCat("surface ", width, " x ", height,
                     " mm is smaller than the tool diameter ",
                     2.0 * tool_radius, " mm"));
  }
  const bool lanes_along_x = width >= height;
  const double long_side = lanes_along_x ? width : height;
  const double short_side = lanes_along_x ? height : width;
  const int lanes = LaneCount(short_side, tool_radius, overlap);
  const double step = (short_side - 2.0 * tool_radius) / (lanes - 1);

  PlannedTrajectory plan;
  plan.tool_radius = tool_radius;
  plan.nominal_speed = nominal_speed;
  plan.z_ref = z_ref;
  for (int i = 0; i < lanes; ++i) {
    const double across = tool_radius + step * i;
    const bool forward = (i % 2) == 0;
    const double a = forward ? 0.0 : long_side;
    const double b = forward ? long_side : 0.0;
    if (lanes_along_x) {
      plan.waypoints.push_back({a, across});
      plan.waypoints.push_back({b, across});
    } else {
      plan.waypoints.push_back({across, a});
      plan.waypoints.push_back({across, b});
    }
  }
  if (absl::Status s = ValidatePlan(plan); !s.ok()) return s;
  return plan;
}

absl::StatusOr<PlannedTrajectory> PlanRasterWithOvertravel(
    double width, double height, double tool_radius, double overlap,
    double overtravel, double nominal_speed, double z_ref) {
  if (!(overtravel >= 0.0) || !std::isfinite(overtravel)) {
    return absl::InvalidArgumentError("overtravel must be >= 0");
  }
  if (!(width > 2.0 * tool_radius) || !(height > 2.0 * tool_radius)) {
    return absl::InvalidArgumentError(
        absl::StrCat("surface ", width, " x ", height,
                     " mm is smaller than the tool diameter ",
                     2.0 * tool_radius, " mm"));
  }
  absl::StatusOr<PlannedTrajectory> plan =
      PlanRaster(width + 2.0 * overtravel, height + 2.0 * overtravel,
                 tool_radius, overlap, nominal_speed, z_ref);
  if (!plan.ok()) return plan.status();
  for (Point2& p : plan->waypoints) {
    p.x -= overtravel;
    p.y -= overtravel;
  }
  return plan;
}

absl::StatusOr<FollowResult> SimulateFollow(const PlannedTrajectory& plan,
                                            const ControllerParams& ctrl,
                                            const NetworkConditions& cond,
                                            double duration_limit_s,
                                            const SimulationOptions& options) {
  if (absl::Status s = ValidatePlan(plan); !s.ok()) return s;
  if (absl::Status s = ValidateController(ctrl); !s.ok()) return s;
  if (!(duration_limit_s > 0.0) || !std::isfinite(duration_limit_s)) {
    return absl::InvalidArgumentError("duration_limit must be > 0");
  }
  if (!(options.resolution_mm > 0.0)) {
    return absl::InvalidArgumentError("resolution must be > 0");
  }
  absl::StatusOr<Channel> command_channel = Channel::Create(cond);
  if (!command_channel.ok()) return command_channel.status();
  NetworkConditions sensing_cond = cond;
  sensing_cond.seed = MixSeed(cond.seed, kSensingStream);
  absl::StatusOr<Channel> sensing_channel = Channel::Create(sensing_cond);
  if (!sensing_channel.ok()) return sensing_channel.status();
  Rng noise(MixSeed(cond.seed ^ RunSalt(plan, cond, options.symmetric_delay),
                    kPlantStream));

  const double dt = 1.0 / ctrl.control_rate_hz;
  const double capture =
      ctrl.waypoint_capture_radius.value_or(plan.tool_radius);
  const double profile_accel = kProfileAccelFraction * ctrl.max_accel;
  const double max_dv = ctrl.max_accel * dt;
  const size_t max_ticks =
      static_cast<size_t>(std::ceil(duration_limit_s * ctrl.control_rate_hz));

  std::vector<SegmentProfile> segments;
  segments.reserve(plan.waypoints.size() - 1);
  for (size_t i = 0; i + 1 < plan.waypoints.size(); ++i) {
    segments.emplace_back(plan.waypoints[i], plan.waypoints[i + 1],
                          plan.nominal_speed, profile_accel);
  }

  auto draw_angle = [&noise, &ctrl]() {
    if (ctrl.orientation_noise_std == 0.0) return 0.0;
    return ctrl.orientation_noise_std * noise.Gaussian();
  };

  FollowResult result;
  result.log.resolution = options.resolution_mm;
  result.timed.resolution = options.resolution_mm;
  SpatialSampler sampler(&result.log, options.resolution_mm);

  Point2 pos = plan.waypoints.front();
  Point2 sensed = pos;
  double vx = 0.0;
  double vy = 0.0;
  double cmd_x = 0.0;
  double cmd_y = 0.0;
  double prev_avg_vx = 0.0;
  double prev_avg_vy = 0.0;
  double z_prev = plan.z_ref;
  size_t seg = 0;
  double seg_start = 0.0;
  uint64_t sequence = 0;

  {
    Pose start{0.0, pos.x, pos.y, plan.z_ref, 0.0, 0.0, 0.0};
    start.roll = draw_angle();
    start.pitch = draw_angle();
    result.log.samples.push_back(start);
    result.timed.samples.push_back(start);
  }

  std::vector<MotionPiece> pieces;
  for (size_t tick = 0; tick < max_ticks; ++tick) {
    const double t = static_cast<double>(tick) * dt;
    const double t_next = static_cast<double>(tick + 1) * dt;

    // Controller side.
    const SegmentProfile& profile = segments[seg];
    const Point2 ref_now = profile.At(t - seg_start);
    const Point2 ref_next = profile.At(t_next - seg_start);
    const Point2 feedback = options.symmetric_delay ? sensed : pos;
    double want_x = (ref_next.x - ref_now.x) / dt +
                    ctrl.gain * (ref_now.x - feedback.x);
    double want_y = (ref_next.y - ref_now.y) / dt +
                    ctrl.gain * (ref_now.y - feedback.y);
    const double want_speed = Norm(want_x, want_y);
    if (want_speed > ctrl.max_speed) {
      want_x *= ctrl.max_speed / want_speed;
      want_y *= ctrl.max_speed / want_speed;
    }
    double dvx = want_x - cmd_x;
    double dvy = want_y - cmd_y;
    const double dv = Norm(dvx, dvy);
    if (dv > max_dv) {
      dvx *= max_dv / dv;
      dvy *= max_dv / dv;
    }
    cmd_x += dvx;
    cmd_y += dvy;
    TimedMessage msg;
    msg.send_time = t;
    msg.payload_size = options.command_payload_bytes;
    msg.sequence = sequence++;
    msg.payload = {cmd_x, cmd_y};
    if (absl::Status s = command_channel->Send(msg); !s.ok()) return s;

    // Plant side: piecewise-constant velocity between deliveries.
    pieces.clear();
    const Point2 tick_start = pos;
    double cursor = t;
    for (const Delivery& d : command_channel->Poll(t_next)) {
      const double at = std::max(d.delivery_time, t);
      if (at > cursor) {
        pieces.push_back({pos, vx, vy, cursor, at - cursor});
        pos.x += vx * (at - cursor);
        pos.y += vy * (at - cursor);
        cursor = at;
      }
      vx = d.message.payload.vx;
      vy = d.message.payload.vy;
    }
    if (t_next > cursor) {
      pieces.push_back({pos, vx, vy, cursor, t_next - cursor});
      pos.x += vx * (t_next - cursor);
      pos.y += vy * (t_next - cursor);
    }

    const double avg_vx = (pos.x - tick_start.x) / dt;
    const double avg_vy = (pos.y - tick_start.y) / dt;
    const double lateral_accel =
        Norm(avg_vx - prev_avg_vx, avg_vy - prev_avg_vy) / dt;
    prev_avg_vx = avg_vx;
    prev_avg_vy = avg_vy;
    const double z_next = plan.z_ref + ctrl.z_compliance * lateral_accel;

    auto pose_at = [&](double when, double x, double y) {
      const double frac = (when - t) / dt;
      Pose p{when, x, y, z_prev + (z_next - z_prev) * frac, 0.0, 0.0, 0.0};
      p.roll = draw_angle();
      p.pitch = draw_angle();
      return p;
    };
    for (const MotionPiece& piece : pieces) {
      sampler.Move(piece.start, piece.vx, piece.vy, piece.t0, piece.duration,
                   pose_at);
    }
    z_prev = z_next;

    Pose tick_pose{t_next, pos.x, pos.y, z_next, 0.0, 0.0, 0.0};
    tick_pose.roll = draw_angle();
    tick_pose.pitch = draw_angle();
    result.timed.samples.push_back(tick_pose);

    if (options.symmetric_delay) {
      TimedMessage report;
      report.send_time = t_next;
      report.payload_size = options.command_payload_bytes;
      report.sequence = tick;
      report.payload = {pos.x, pos.y};
      if (absl::Status s = sensing_channel->Send(report); !s.ok()) return s;
      for (const Delivery& d : sensing_channel->Poll(t_next)) {
        sensed = {d.message.payload.vx, d.message.payload.vy};
      }
    }

    // Waypoint advance.
    if (t_next - seg_start >= profile.total &&
        Norm(pos.x - profile.to.x, pos.y - profile.to.y) <= capture) {
      ++seg;
      seg_start = t_next;
      if (seg == segments.size()) {
        result.complete = true;
        break;
      }
    }
  }

  const Pose& last_tick = result.timed.samples.back();
  if (sampler.travelled() > 1e-9 && last_tick.t > result.log.samples.back().t) {
    result.log.samples.push_back(last_tick);
  }
  result.commands_sent = command_channel->sent();
  result.commands_dropped = command_channel->dropped();
  return result;
}

void WriteTrajectoryCsv(const TrajectoryLog& log, std::ostream& os) {
  os << "t,x,y,z,roll,pitch,yaw\n";
  for (const Pose& p : log.samples) {
    os << FormatDouble(p.t) << ',' << FormatDouble(p.x) << ','
       << FormatDouble(p.y) << ',' << FormatDouble(p.z) << ','
       << FormatDouble(p.roll) << ',' << FormatDouble(p.pitch) << ','
       << FormatDouble(p.yaw) << '\n';
  }
}

absl::StatusOr<TrajectoryLog> ReadTrajectoryCsv(std::istream& is,
                                                double resolution) {
  std::string line;
  if (!std::getline(is, line)) {
    return absl::InvalidArgumentError("empty trajectory file");
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "t,x,y,z,roll,pitch,yaw") {
    return absl::InvalidArgumentError(
        absl::StrCat("unexpected trajectory header: ", line));
  }
  TrajectoryLog log;
  log.resolution = resolution;
  size_t row = 1;
  while (std::getline(is, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    const auto fields = SplitFields(line, ',');
    if (fields.size() != 7) {
      return absl::InvalidArgumentError(
          absl::StrCat("row ", row, ": expected 7 fields"));
    }
    double v[7];
    for (int i = 0; i < 7; ++i) {
      absl::StatusOr<double> parsed = ParseDouble(fields[i]);
      if (!parsed.ok()) {
        return absl::InvalidArgumentError(
            absl::StrCat("row ", row, ": ", parsed.status().message()));
      }
      v[i] = *parsed;
    }
    log.samples.push_back({v[0], v[1], v[2], v[3], v[4], v[5], v[6]});
  }
  return log;
}

void WritePlanCsv(const PlannedTrajectory& plan, std::ostream& os) {
  os << "x,y\n";
  for (const Point2& p : plan.waypoints) {
    os << FormatDouble(p.x) << ',' << FormatDouble(p.y) << '\n';
  }
}

}  // namespace sandqos
