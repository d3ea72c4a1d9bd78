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

// Rank statistics used by sweep analysis.

#ifndef SANDQOS_STATS_H_
#define SANDQOS_STATS_H_

#include <span>
#include <vector>

#include "absl/status/statusor.h"

namespace sandqos {

// 1-based ranks; tied values share the mean of their positions.
std::vector<double> AverageRanks(std::span<const double> values);

absl::StatusOr<double> PearsonCorrelation(std::span<const double> x,
                                          std::span<const double> y);

// Pearson correlation of the average ranks. Errors when the inputs differ
// in length, hold fewer than two values, or either side is constant.
absl::StatusOr<double> SpearmanCorrelation(std::span<const double> x,
                                           std::span<const double> y);

}  // namespace sandqos

#endif  // SANDQOS_STATS_H_
