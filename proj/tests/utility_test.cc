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

#include <string>
#include <vector>

#include "gtest/gtest.h"
#include "support/test_util.h"

namespace sandqos {
namespace {

UtilitySpec TwoRequirementSpec() {
  UtilitySpec spec;
  spec.phase = Phase::kSanding;
  spec.requirements = {{"traj_err_max", 1.0, 3.0, 9.0},
                       {"vel_max", 1.0, 150.0, 450.0}};
  return spec;
}

RobotKpis Kpis(double traj_err_max, double vel_max) {
  RobotKpis k;
  k.traj_err_max = traj_err_max;
  k.vel_max = vel_max;
  return k;
}

double Robot(const RobotKpis& k, const UtilitySpec& spec) {
  absl::StatusOr<Emos> e = EmosRobot(k, spec);
  EXPECT_TRUE(e.ok()) << e.status();
  return e.ok() ? e->value() : -1.0;
}

TEST(EmosRobotTest, AllAtGoodThresholdsIsFive) {
  EXPECT_EQ(Robot(Kpis(3.0, 150.0), TwoRequirementSpec()), 5.0);
}

TEST(EmosRobotTest, AllAtBadThresholdsIsOne) {
  EXPECT_EQ(Robot(Kpis(9.0, 450.0), TwoRequirementSpec()), 1.0);
}

TEST(EmosRobotTest, OneGoodOneMidwayIsFour) {
  EXPECT_EQ(Robot(Kpis(3.0, 300.0), TwoRequirementSpec()), 4.0);
  EXPECT_EQ(Robot(Kpis(6.0, 100.0), TwoRequirementSpec()), 4.0);
}

TEST(EmosRobotTest, ScoresClampOutsideAnchors) {
  EXPECT_EQ(Robot(Kpis(0.0, 0.0), TwoRequirementSpec()), 5.0);
  EXPECT_EQ(Robot(Kpis(1e6, 1e6), TwoRequirementSpec()), 1.0);
}

TEST(EmosRobotTest, ScanningWithoutConstraintsIsFive) {
  RobotKpis k = Kpis(100.0, 1000.0);
  k.phase = Phase::kScanning;
  EXPECT_EQ(Robot(k, DefaultScanningSpec()), 5.0);
}

TEST(EmosRobotTest, Errors) {
  RobotKpis k = Kpis(3.0, 150.0);
  k.phase = Phase::kScanning;
  EXPECT_FALSE(EmosRobot(k, TwoRequirementSpec()).ok());
  UtilitySpec spec = TwoRequirementSpec();
  spec.requirements[0].kpi_name = "smoothness";
  EXPECT_EQ(EmosRobot(Kpis(1, 1), spec).status().code(),
            absl::StatusCode::kNotFound);
  spec = TwoRequirementSpec();
  for (KpiRequirement& r : spec.requirements) r.weight = 0.0;
  EXPECT_FALSE(EmosRobot(Kpis(1, 1), spec).ok());
}

TEST(UtilitySpecTest, Validation) {
  UtilitySpec spec = TwoRequirementSpec();
  EXPECT_OK(ValidateUtilitySpec(spec));
  spec.requirements[0].good = 9.0;
  EXPECT_FALSE(ValidateUtilitySpec(spec).ok());
  spec = TwoRequirementSpec();
  spec.requirements[1].weight = -1.0;
  EXPECT_FALSE(ValidateUtilitySpec(spec).ok());
  spec = TwoRequirementSpec();
  spec.target_emos = 5.5;
  EXPECT_FALSE(ValidateUtilitySpec(spec).ok());
  EXPECT_OK(ValidateUtilitySpec(DefaultSandingSpec()));
  EXPECT_OK(ValidateUtilitySpec(DefaultScanningSpec()));
  EXPECT_OK(ValidateUtilitySpec(AnchoredSandingSpec()));
}

TEST(UtilitySpecTest, DefaultsCarryTheStatedAnchors) {
  const UtilitySpec sanding = DefaultSandingSpec();
  auto find = [&sanding](const std::string& name) {
    for (const KpiRequirement& r : sanding.requirements) {
      if (r.kpi_name == name) return r;
    }
    ADD_FAILURE() << "missing " << name;
    return KpiRequirement{};
  };
  EXPECT_EQ(find("traj_err_max").good, 3.0);
  EXPECT_EQ(find("traj_err_max").bad, 9.0);
  EXPECT_EQ(find("vel_max").good, 150.0);
  EXPECT_EQ(find("vel_max").bad, 450.0);
  EXPECT_GT(find("vel_mean").weight, 0.0);
  EXPECT_EQ(find("orient_err_rms").weight, 0.0);
  EXPECT_LT(find("z_dev_max").weight, find("traj_err_max").weight);

  const UtilitySpec anchored = AnchoredSandingSpec(2.0, 120.0, 3.5);
  ASSERT_EQ(anchored.requirements.size(), 2u);
  EXPECT_EQ(anchored.requirements[0].bad, 6.0);
  EXPECT_EQ(anchored.requirements[1].bad, 360.0);
  EXPECT_EQ(anchored.target_emos, 3.5);
}

TEST(EmosRobotTest, WorseningAnyWeightedKpiNeverHelps) {
  const UtilitySpec spec = DefaultSandingSpec();
  Rng rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    RobotKpis k;
    for (const std::string& name : KpiNames()) {
      ASSERT_OK(SetKpiValue(k, name, rng.Uniform(0.0, 500.0)));
    }
    const double before = Robot(k, spec);
    EXPECT_GE(before, 1.0);
    EXPECT_LE(before, 5.0);
    for (const std::string& name : KpiNames()) {
      RobotKpis worse = k;
      ASSERT_OK(SetKpiValue(worse, name, *KpiValue(k, name) * 1.3 + 0.1));
      EXPECT_LE(Robot(worse, spec), before) << name;
    }
  }
}

TEST(EmosRobotTest, ScalingAllWeightsChangesNothing) {
  const UtilitySpec spec = DefaultSandingSpec();
  Rng rng(3);
  for (double factor : {0.01, 2.0, 1e4}) {
    UtilitySpec scaled = spec;
    for (KpiRequirement& r : scaled.requirements) r.weight *= factor;
    for (int trial = 0; trial < 50; ++trial) {
      RobotKpis k;
      k.traj_err_max = rng.Uniform(0, 12);
      k.vel_max = rng.Uniform(100, 500);
      k.vel_mean = rng.Uniform(50, 350);
      k.z_dev_max = rng.Uniform(0, 10);
      EXPECT_NEAR(Robot(k, scaled), Robot(k, spec), 1e-12);
    }
  }
}

ProductQuality WithEmd(double emd) {
  ProductQuality q;
  q.emd = emd;
  return q;
}

UtilitySpec SurfaceAndColour(double surface_weight, double colour_weight) {
  UtilitySpec spec;
  spec.requirements = {{"emd", surface_weight, 0.01, 0.03},
                       {"material_score", colour_weight, 0.0, 1.0}};
  return spec;
}

double Customer(double emd, double material, const UtilitySpec& spec) {
  ExogenousFactors ex;
  ex.material_score = material;
  absl::StatusOr<Emos> e = EmosCustomer(WithEmd(emd), ex, spec);
  EXPECT_TRUE(e.ok()) << e.status();
  return e.ok() ? e->value() : -1.0;
}

TEST(EmosCustomerTest, Examples) {
  EXPECT_EQ(Customer(0.0, 5.0, SurfaceAndColour(1, 1)), 5.0);
  EXPECT_EQ(Customer(0.0, 1.0, SurfaceAndColour(1, 1)), 3.0);
  EXPECT_EQ(Customer(0.03, 5.0, SurfaceAndColour(3, 1)), 2.0);
}

TEST(EmosCustomerTest, ToolScoreAndErrors) {
  UtilitySpec spec;
  spec.requirements = {{"tool_score", 1.0, 0.0, 1.0}};
  ExogenousFactors ex;
  ex.tool_score = 2.5;
  ASSERT_OK_AND_ASSIGN(Emos e, EmosCustomer(WithEmd(0), ex, spec));
  EXPECT_EQ(e.value(), 2.5);
  ex.tool_score = 7.0;
  EXPECT_FALSE(EmosCustomer(WithEmd(0), ex, spec).ok());
  ex.tool_score = 3.0;
  spec.requirements = {{"gloss", 1.0, 0.0, 1.0}};
  EXPECT_FALSE(EmosCustomer(WithEmd(0), ex, spec).ok());
  spec.requirements = {{"emd", 0.0, 0.0, 1.0}};
  EXPECT_FALSE(EmosCustomer(WithEmd(0), ex, spec).ok());
}

TEST(EmosCustomerTest, ExogenousFactorsNeverReachTheRobotScore) {
  const RobotKpis k = Kpis(4.5, 200.0);
  const double base = Robot(k, DefaultSandingSpec());
  for (double material : {1.0, 2.0, 5.0}) {
    EXPECT_EQ(Robot(k, DefaultSandingSpec()), base);
    EXPECT_NE(Customer(0.02, material, DefaultCustomerSpec()),
              Customer(0.02, material == 5.0 ? 1.0 : 5.0,
                       DefaultCustomerSpec()));
  }
}

TEST(EmosTest, CreateAndClamp) {
  EXPECT_TRUE(Emos::Create(1.0).ok());
  EXPECT_TRUE(Emos::Create(5.0).ok());
  EXPECT_FALSE(Emos::Create(0.99).ok());
  EXPECT_FALSE(Emos::Create(NAN).ok());
  EXPECT_EQ(Emos::Clamped(7.0).value(), 5.0);
  EXPECT_EQ(Emos::Clamped(-1.0).value(), 1.0);
  EXPECT_EQ(Emos::Clamped(NAN).value(), 1.0);
}

TEST(ScoreRequirementTest, PiecewiseLinear) {
  const KpiRequirement r{"x", 1.0, 10.0, 20.0};
  EXPECT_EQ(ScoreRequirement(r, 10.0), 5.0);
  EXPECT_EQ(ScoreRequirement(r, 20.0), 1.0);
  EXPECT_EQ(ScoreRequirement(r, 15.0), 3.0);
  EXPECT_EQ(ScoreRequirement(r, 12.5), 4.0);
}

}  // namespace
}  // namespace sandqos
