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

// Sanding as cumulative Gaussian material removal on a flat grid.

#ifndef SANDQOS_SURFACE_H_
#define SANDQOS_SURFACE_H_

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "sandqos/path.h"
#include "sandqos/rng.h"

namespace sandqos {

// Cell (ix, iy) covers [origin.x + ix * cell_size, origin.x + (ix + 1) *
// cell_size) and likewise in y.
struct GridSpec {
  int width = 1;
  int height = 1;
  double cell_size = 1.0;  // mm
  Point2 origin;

  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

absl::Status ValidateGridSpec(const GridSpec& spec);

// Smallest grid with `cell_size` cells covering [0, width] x [0, height].
GridSpec GridForSurface(double width, double height, double cell_size);

class Grid {
 public:
  explicit Grid(const GridSpec& spec)
      : spec_(spec),
        cells_(static_cast<size_t>(spec.width) * spec.height, 0.0) {}

  const GridSpec& spec() const { return spec_; }
  int width() const { return spec_.width; }
  int height() const { return spec_.height; }
  double cell_size() const { return spec_.cell_size; }

  double& at(int ix, int iy) {
    return cells_[static_cast<size_t>(iy) * spec_.width + ix];
  }
  double at(int ix, int iy) const {
    return cells_[static_cast<size_t>(iy) * spec_.width + ix];
  }
  Point2 CellCenter(int ix, int iy) const {
    return {spec_.origin.x + (ix + 0.5) * spec_.cell_size,
            spec_.origin.y + (iy + 0.5) * spec_.cell_size};
  }

  std::span<double> values() { return cells_; }
  std::span<const double> values() const { return cells_; }
  double Sum() const;

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  GridSpec spec_;
  std::vector<double> cells_;
};

// Cumulative removed mass per cell.
struct Heatmap {
  Grid grid;
};

// Signed deviation of each cell from its local neighbourhood mean.
struct DeviationMap {
  Grid grid;
  int window = 1;
  // Total mass of the heatmap the map was derived from.
  double source_mass = 0.0;
};

// Standard deviation of the imprint for a given tool radius.
inline double ImprintSigma(double tool_radius) { return tool_radius / 2.0; }

// Adds the cell-integrated mass of an isotropic Gaussian (sigma =
// tool_radius / 2) truncated to +-3 sigma on each axis and renormalised so
// the full imprint carries `mass`. Off-grid parts are dropped.
absl::Status StampImprint(Heatmap& map, Point2 center, double tool_radius,
                          double mass);

// Monte Carlo variant: `particles` hits of mass / particles each, drawn from
// the same truncated Gaussian.
absl::Status StampImprintSampled(Heatmap& map, Point2 center,
                                 double tool_radius, double mass,
                                 int particles, Rng& rng);

// One analytic stamp per stored sample.
absl::StatusOr<Heatmap> ReplayTrajectory(const TrajectoryLog& log,
                                         double tool_radius,
                                         double mass_per_sample,
                                         const GridSpec& grid);

// `window` is the odd side length of the averaging neighbourhood in cells.
// Neighbourhoods are truncated at the grid border.
absl::StatusOr<DeviationMap> ComputeDeviationMap(const Heatmap& map,
                                                 int window);

// 8 * tool_radius expressed in cells, made odd, capped at the grid.
int DefaultDeviationWindow(double tool_radius, const GridSpec& grid);

// Rows of space-separated values, row iy = 0 first.
void WriteGridText(const Grid& grid, std::ostream& os);
absl::StatusOr<Grid> ReadGridText(std::istream& is, double cell_size = 1.0);

// Binary 16-bit PGM, linear min-max scaled, highest row at the top.
void WriteGridPgm16(const Grid& grid, std::ostream& os);

}  // namespace sandqos

#endif  // SANDQOS_SURFACE_H_
