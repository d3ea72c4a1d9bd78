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

// Product quality as the earth mover's distance needed to flatten a
// deviation map: bumps are supplies, pits are demands, and the ground
// distance is the Euclidean distance between cell centres.

#ifndef SANDQOS_QUALITY_H_
#define SANDQOS_QUALITY_H_

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "sandqos/netchan.h"
#include "sandqos/path.h"
#include "sandqos/surface.h"

namespace sandqos {

inline constexpr size_t kMaxTransportArcs = 1'000'000;

struct TransportNode {
  Point2 position;  // mm
  double mass = 0.0;
  int cell_index = -1;
};

struct TransportInstance {
  std::vector<TransportNode> supplies;
  std::vector<TransportNode> demands;
};

struct TransportFlow {
  int supply = 0;
  int demand = 0;
  double amount = 0.0;
};

struct TransportSolution {
  double cost = 0.0;
  std::vector<TransportFlow> flows;
};

// Splits the map by sign. When the totals differ (local windows) both sides
// are rescaled to the mean of the two totals.
absl::StatusOr<TransportInstance> BuildTransport(const DeviationMap& dev);

// Exact min-cost transportation by successive shortest augmenting paths
// with node potentials on the dense bipartite graph.
absl::StatusOr<TransportSolution> SolveTransport(const TransportInstance& inst);

absl::StatusOr<double> EmdExact(const TransportInstance& inst);

// Sums factor x factor blocks (signed mass is preserved). Coarse cells keep
// the full block geometry at the far edges.
absl::StatusOr<DeviationMap> DownsampleDeviation(const DeviationMap& dev,
                                                 int factor);

// Smallest factor bringing both grid sides to at most `max_side` cells.
int DefaultDownsample(const GridSpec& grid, int max_side = 32);

struct ProductQuality {
  // Transport work per unit removed mass, in mm.
  double emd = 0.0;
  // Raw transport work in mass x mm.
  double work = 0.0;
  double removed_mass = 0.0;
  int grid_width = 0;
  int grid_height = 0;
  int downsample = 1;
  double tool_radius = 0.0;
  NetworkConditions conditions;
};

absl::StatusOr<ProductQuality> ScoreProduct(const DeviationMap& dev,
                                            int downsample,
                                            double tool_radius = 0.0,
                                            const NetworkConditions& cond = {});

// "tool_radius,delay_ms,jitter_ms,loss,emd"
std::string QualityTableHeader();
std::string QualityTableRow(const ProductQuality& q);

}  // namespace sandqos

#endif  // SANDQOS_QUALITY_H_
