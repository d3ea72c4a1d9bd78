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

// Utility functions mapping measured quality to an estimated opinion score
// on the 1..5 scale: one for the robot operator over robot KPIs, one for
// the customer over product quality and exogenous factors.

#ifndef SANDQOS_UTILITY_H_
#define SANDQOS_UTILITY_H_

#include <string>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "sandqos/kpi.h"
#include "sandqos/quality.h"

namespace sandqos {

enum class Direction { kLowerIsBetter };

struct KpiRequirement {
  std::string kpi_name;
  double weight = 0.0;
  double good = 0.0;  // score 5 at or below
  double bad = 1.0;   // score 1 at or above
  Direction direction = Direction::kLowerIsBetter;

  friend bool operator==(const KpiRequirement&,
                         const KpiRequirement&) = default;
};

struct UtilitySpec {
  Phase phase = Phase::kSanding;
  std::vector<KpiRequirement> requirements;
  double target_emos = 4.0;

  friend bool operator==(const UtilitySpec&, const UtilitySpec&) = default;
};

absl::Status ValidateUtilitySpec(const UtilitySpec& spec);

class Emos {
 public:
  static constexpr double kMin = 1.0;
  static constexpr double kMax = 5.0;

  static absl::StatusOr<Emos> Create(double value);
  // Clamps into [1, 5]; NaN maps to 1.
  static Emos Clamped(double value);

  double value() const { return value_; }

  friend bool operator==(const Emos&, const Emos&) = default;

 private:
  explicit Emos(double v) : value_(v) {}
  double value_;
};

// Exogenous quality proxies, already on the 1..5 scale.
struct ExogenousFactors {
  double material_score = 5.0;
  double tool_score = 5.0;
};

absl::Status ValidateExogenous(const ExogenousFactors& ex);

// Piecewise-linear score of one KPI value against its anchors.
double ScoreRequirement(const KpiRequirement& req, double value);

absl::StatusOr<Emos> EmosRobot(const RobotKpis& kpis, const UtilitySpec& spec);

// Requirement names: "emd" (scored against its anchors), "material_score"
// and "tool_score" (used as-is).
absl::StatusOr<Emos> EmosCustomer(const ProductQuality& quality,
                                  const ExogenousFactors& exogenous,
                                  const UtilitySpec& spec);

// High weight on trajectory error and peak/mean speed, medium on Z
// deviation, none on orientation. traj_err_max and vel_max anchors are
// 3 mm and 150 mm/s with bad anchors at three times those.
UtilitySpec DefaultSandingSpec();

// Stop-and-scan is insensitive to command latency: no constraints.
UtilitySpec DefaultScanningSpec();

// Only the two anchored requirements, equal weights.
UtilitySpec AnchoredSandingSpec(double traj_err_good_mm = 3.0,
                                double vel_max_good_mm_s = 150.0,
                                double target_emos = 4.0);

// EMD anchors (mm of transport per unit mass) come from this simulator's
// own 12.5 mm baseline, not from any external scale.
UtilitySpec DefaultCustomerSpec();

}  // namespace sandqos

#endif  // SANDQOS_UTILITY_H_
