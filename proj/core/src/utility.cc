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

#include "sandqos/utility.h"

#include <algorithm>
#include <cmath>

#include "absl/strings/str_cat.h"

namespace sandqos {
namespace {

absl::Status ValidateRequirement(const KpiRequirement& req) {
  if (!std::isfinite(req.weight) || req.weight < 0.0) {
    return absl::InvalidArgumentError(
        absl::StrCat("requirement ", req.kpi_name, ": weight must be >= 0"));
  }
  if (!std::isfinite(req.good) || !std::isfinite(req.bad) ||
      !(req.good < req.bad)) {
    return absl::InvalidArgumentError(absl::StrCat(
        "requirement ", req.kpi_name, ": need good < bad, got ", req.good,
        " and ", req.bad));
  }
  return absl::OkStatus();
}

double TotalWeight(const UtilitySpec& spec) {
  double total = 0.0;
  for (const KpiRequirement& r : spec.requirements) total += r.weight;
  return total;
}

}  // namespace

absl::Status ValidateUtilitySpec(const UtilitySpec& spec) {
  for (const KpiRequirement& r : spec.requirements) {
    if (absl::Status s = ValidateRequirement(r); !s.ok()) return s;
  }
  if (!(spec.target_emos >= Emos::kMin && spec.target_emos <= Emos::kMax)) {
    return absl::InvalidArgumentError(
        absl::StrCat("target_emos must lie in [1, 5], got ", spec.target_emos));
  }
  if (spec.phase == Phase::kSanding && !(TotalWeight(spec) > 0.0)) {
    return absl::InvalidArgumentError(
        "a sanding-phase spec needs at least one positive weight");
  }
  return absl::OkStatus();
}

absl::StatusOr<Emos> Emos::Create(double value) {
  if (!(value >= kMin && value <= kMax)) {
    return absl::InvalidArgumentError(
        absl::StrCat("eMOS must lie in [1, 5], got ", value));
  }
  return Emos(value);
}

Emos Emos::Clamped(double value) {
  if (std::isnan(value)) return Emos(kMin);
  return Emos(std::clamp(value, kMin, kMax));
}

absl::Status ValidateExogenous(const ExogenousFactors& ex) {
  auto in_range = [](double v) { return v >= 1.0 && v <= 5.0; };
  if (!in_range(ex.material_score) || !in_range(ex.tool_score)) {
    return absl::InvalidArgumentError("exogenous scores must lie in [1, 5]");
  }
  return absl::OkStatus();
}

double ScoreRequirement(const KpiRequirement& req, double value) {
  if (value <= req.good) return 5.0;
  if (value >= req.bad) return 1.0;
  return 5.0 - 4.0 * (value - req.good) / (req.bad - req.good);
}

absl::StatusOr<Emos> EmosRobot(const RobotKpis& kpis,
                               const UtilitySpec& spec) {
  if (absl::Status s = ValidateUtilitySpec(spec); !s.ok()) return s;
  if (spec.phase != kpis.phase) {
    return absl::InvalidArgumentError(
        absl::StrCat("spec is for phase ", std::string(PhaseName(spec.phase)),
                     " but KPIs are from phase ",
                     std::string(PhaseName(kpis.phase))));
  }
  double weighted = 0.0;
  for (const KpiRequirement& r : spec.requirements) {
    absl::StatusOr<double> v = KpiValue(kpis, r.kpi_name);
    if (!v.ok()) return v.status();
    weighted += r.weight * ScoreRequirement(r, *v);
  }
  const double total = TotalWeight(spec);
  if (total == 0.0) return Emos::Clamped(Emos::kMax);
  return Emos::Clamped(weighted / total);
}

absl::StatusOr<Emos> EmosCustomer(const ProductQuality& quality,
                                  const ExogenousFactors& exogenous,
                                  const UtilitySpec& spec) {
  if (absl::Status s = ValidateExogenous(exogenous); !s.ok()) return s;
  for (const KpiRequirement& r : spec.requirements) {
    if (absl::Status s = ValidateRequirement(r); !s.ok()) return s;
  }
  const double total = TotalWeight(spec);
  if (!(total > 0.0)) {
    return absl::InvalidArgumentError(
        "customer spec needs at least one positive weight");
  }
  double weighted = 0.0;
  for (const KpiRequirement& r : spec.requirements) {
    double score = 0.0;
    if (r.kpi_name == "emd") {
      score = ScoreRequirement(r, quality.emd);
    } else if (r.kpi_name == "material_score") {
      score = exogenous.material_score;
    } else if (r.kpi_name == "tool_score") {
      score = exogenous.tool_score;
    } else {
      return absl::NotFoundError(
          absl::StrCat("unknown customer factor '", r.kpi_name, "'"));
    }
    weighted += r.weight * score;
  }
  return Emos::Clamped(weighted / total);
}

UtilitySpec DefaultSandingSpec() {
  UtilitySpec spec;
  spec.phase = Phase::kSanding;
  spec.target_emos = 4.0;
  spec.requirements = {
      {"traj_err_max", 1.0, 3.0, 9.0},
      {"vel_max", 1.0, 150.0, 450.0},
      {"vel_mean", 1.0, 100.0, 300.0},
      {"z_dev_max", 0.5, 3.0, 9.0},
      {"orient_err_rms", 0.0, 0.05, 0.15},
  };
  return spec;
}

UtilitySpec DefaultScanningSpec() {
  UtilitySpec spec;
  spec.phase = Phase::kScanning;
  spec.target_emos = 4.0;
  spec.requirements = {
      {"traj_err_max", 0.0, 3.0, 9.0},
      {"vel_max", 0.0, 150.0, 450.0},
  };
  return spec;
}

UtilitySpec AnchoredSandingSpec(double traj_err_good_mm,
                                double vel_max_good_mm_s, double target_emos) {
  UtilitySpec spec;
  spec.phase = Phase::kSanding;
  spec.target_emos = target_emos;
  spec.requirements = {
      {"traj_err_max", 1.0, traj_err_good_mm, 3.0 * traj_err_good_mm},
      {"vel_max", 1.0, vel_max_good_mm_s, 3.0 * vel_max_good_mm_s},
  };
  return spec;
}

UtilitySpec DefaultCustomerSpec() {
  UtilitySpec spec;
  spec.phase = Phase::kSanding;
  spec.target_emos = 4.0;
  spec.requirements = {
      {"emd", 3.0, 0.01, 0.03},
      {"material_score", 1.0, 0.0, 1.0},
  };
  return spec;
}

}  // namespace sandqos
