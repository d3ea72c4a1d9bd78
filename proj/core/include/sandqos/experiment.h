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

// Experiment runner: configuration, single runs with on-disk artifacts,
// parallel sweeps producing the results / calibration table, and the
// closed-loop feedback demo against an NRM server.

#ifndef SANDQOS_EXPERIMENT_H_
#define SANDQOS_EXPERIMENT_H_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "nlohmann/json.hpp"
#include "sandqos/kpi.h"
#include "sandqos/netchan.h"
#include "sandqos/nrm.h"
#include "sandqos/path.h"
#include "sandqos/protocol.h"
#include "sandqos/quality.h"
#include "sandqos/surface.h"
#include "sandqos/utility.h"

namespace sandqos {

// Environment variable naming the default configuration file.
inline constexpr char kConfigEnvVar[] = "SANDQOS_CONFIG";

struct SweepSpec {
  std::vector<double> delays_ms = {0, 10, 20, 30, 40, 50, 60, 70, 80, 90, 100};
  std::vector<double> tool_radii_mm = {12.5, 25.0, 37.5};
  std::vector<uint64_t> seeds = {1};

  friend bool operator==(const SweepSpec&, const SweepSpec&) = default;
};

struct DemoSettings {
  double initial_latency_ms = 100.0;
  int max_rounds = 5;
  std::vector<std::string> val_ues = {"robot-arm-1"};
  std::string ip_address = "10.0.0.2";

  friend bool operator==(const DemoSettings&, const DemoSettings&) = default;
};

struct ExperimentConfig {
  double surface_width_mm = 200.0;
  double surface_height_mm = 100.0;
  double tool_radius_mm = 12.5;
  double overlap = 0.5;
  // The raster extends this many tool radii past every surface edge.
  double overtravel_tool_radii = 2.0;
  double nominal_speed_mm_s = 100.0;
  double z_ref_mm = 0.0;
  double cell_size_mm = 1.0;
  std::optional<int> deviation_window_cells;  // default 8 * tool radius
  std::optional<int> downsample;              // default to <= 32 x 32
  double mass_per_sample = 1.0;
  double duration_limit_s = 600.0;
  double resolution_mm = 0.5;
  bool symmetric_delay = false;
  int command_payload_bytes = 64;
  Phase phase = Phase::kSanding;
  ControllerParams controller;
  NetworkConditions network;
  SweepSpec sweep;
  UtilitySpec robot_utility = DefaultSandingSpec();
  UtilitySpec customer_utility = DefaultCustomerSpec();
  ExogenousFactors exogenous;
  PolicyCaps caps;
  QoSRequirements nrm_defaults;
  DemoSettings demo;
  std::string output_dir = "sandqos-out";
};

absl::Status ValidateConfig(const ExperimentConfig& config);

nlohmann::json ToJson(const ExperimentConfig& config);
// Members absent from `j` keep their defaults. A top-level "comment"
// string is accepted and ignored.
absl::StatusOr<ExperimentConfig> ConfigFromJson(const nlohmann::json& j);

// Reads `path`; an empty path falls back to $SANDQOS_CONFIG and then to
// the built-in defaults.
absl::StatusOr<ExperimentConfig> LoadConfig(const std::string& path);

// 16 hex digits of FNV-1a over the canonical JSON of the settings that
// determine a single run's outputs.
std::string RunKey(const ExperimentConfig& config);

struct RunResult {
  PlannedTrajectory plan;
  FollowResult follow;
  Heatmap heatmap{Grid(GridSpec{})};
  DeviationMap deviation{Grid(GridSpec{})};
  ProductQuality quality;
  RobotKpis kpis;
  double emos_robot = 0.0;
  double emos_customer = 0.0;
};

absl::StatusOr<PlannedTrajectory> PlanFor(const ExperimentConfig& config);
GridSpec GridFor(const ExperimentConfig& config);

// Simulate, replay, score. No file output.
absl::StatusOr<RunResult> Simulate(const ExperimentConfig& config);

// One row of the sweep results table.
struct SweepRow {
  double tool_radius = 0.0;
  double delay_ms = 0.0;
  double jitter_ms = 0.0;
  double loss = 0.0;
  double emd = 0.0;
  uint64_t seed = 0;
  RobotKpis kpis;

  friend bool operator==(const SweepRow&, const SweepRow&) = default;
};

SweepRow RowFor(const ExperimentConfig& config, const RunResult& result);

// "tool_radius,delay_ms,jitter_ms,loss,emd,seed," then the KPI names.
std::string SweepTableHeader();
std::string FormatSweepRow(const SweepRow& row);
void WriteSweepTable(const std::vector<SweepRow>& rows, std::ostream& os);
absl::StatusOr<std::vector<SweepRow>> ReadSweepTable(std::istream& is);

// Writes config.json, plan.csv, trajectory.csv, trajectory_timed.csv,
// heatmap/deviation as .txt and .pgm, kpis.json, quality.csv, emos.json,
// result.csv (sweep-table format) and summary.json into `dir`.
absl::StatusOr<RunResult> RunOnce(const ExperimentConfig& config,
                                  const std::filesystem::path& dir);

// Every (tool radius, delay, seed) point. Each point's artifacts go to
// <output_dir>/runs/<RunKey>/; a point whose summary.json already exists is
// read back instead of re-run. The table is written to
// <output_dir>/sweep.csv, or sweep.partial.csv when a point fails.
absl::StatusOr<std::vector<SweepRow>> Sweep(const ExperimentConfig& config,
                                            int workers);

// The same points computed in memory only.
absl::StatusOr<std::vector<SweepRow>> SweepInMemory(
    const ExperimentConfig& config, int workers);

// Rows at `tool_radius`, KPIs averaged over seeds per delay.
absl::StatusOr<CalibrationTable> CalibrationFromSweep(
    const std::vector<SweepRow>& rows, double tool_radius);

// Delay sweep at config.tool_radius_mm and the first configured seed.
absl::StatusOr<CalibrationTable> BuildCalibration(
    const ExperimentConfig& config, int workers);

struct DemoResult {
  bool converged = false;
  int rounds = 0;
  double final_latency_ms = 0.0;
  double final_emos = 0.0;
  std::vector<std::string> transcript;
};

// Requests an initial grant, then alternates simulate -> feedback -> grant
// until the simulated eMOS meets the target or max_rounds feedback rounds
// have been spent.
absl::StatusOr<DemoResult> DemoLoop(const ExperimentConfig& config,
                                    FeedbackMode mode, NrmClient& client);

std::shared_ptr<NrmService> ServiceFor(const ExperimentConfig& config,
                                       std::optional<CalibrationTable> table);

}  // namespace sandqos

#endif  // SANDQOS_EXPERIMENT_H_
