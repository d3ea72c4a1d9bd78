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

#include "sandqos/surface.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <numbers>
#include <numeric>
#include <ostream>
#include <string>

#include "absl/strings/str_cat.h"
#include "sandqos/text_format.h"

namespace sandqos {
namespace {

constexpr double kTruncation = 3.0;  // in sigmas

double NormalCdf(double z) {
  return 0.5 * std::erfc(-z / std::numbers::sqrt2);
}

// Mass fraction of a truncated 1-D normal falling in each cell along one
// axis. Returns the first cell index; `weights` holds consecutive cells.
int AxisWeights(double center, double sigma, double origin, double cell,
                int cells, std::vector<double>& weights) {
  weights.clear();
  const double lo = center - kTruncation * sigma;
  const double hi = center + kTruncation * sigma;
  const int first = std::max(0, static_cast<int>(std::floor((lo - origin) / cell)));
  const int last =
      std::min(cells - 1, static_cast<int>(std::floor((hi - origin) / cell)));
  const double norm =
      NormalCdf(kTruncation) - NormalCdf(-kTruncation);
  for (int i = first; i <= last; ++i) {
    const double a = std::max(lo, origin + i * cell);
    const double b = std::min(hi, origin + (i + 1) * cell);
    const double w =
        b > a ? (NormalCdf((b - center) / sigma) -
                 NormalCdf((a - center) / sigma)) / norm
              : 0.0;
    weights.push_back(w);
  }
  return first;
}

absl::Status CheckStampArgs(Point2 center,
                            double tool_radius, double mass) {
  if (!(mass > 0.0) || !std::isfinite(mass)) {
    return absl::InvalidArgumentError("stamp mass must be > 0");
  }
  if (!(tool_radius > 0.0) || !std::isfinite(tool_radius)) {
    return absl::InvalidArgumentError("tool_radius must be > 0");
  }
  if (!std::isfinite(center.x) || !std::isfinite(center.y)) {
    return absl::InvalidArgumentError("stamp centre must be finite");
  }
  return absl::OkStatus();
}

}  // namespace

absl::Status ValidateGridSpec(const GridSpec& spec) {
  if (spec.width < 1 || spec.height < 1) {
    return absl::InvalidArgumentError(
        absl::StrCat("grid must be at least 1x1, got ", spec.width, "x",
                     spec.height));
  }
  if (!(spec.cell_size > 0.0) || !std::isfinite(spec.cell_size)) {
    return absl::InvalidArgumentError("cell_size must be > 0");
  }
  return absl::OkStatus();
}

GridSpec GridForSurface(double width, double height, double cell_size) {
  GridSpec spec;
  spec.cell_size = cell_size;
  spec.width = std::max(1, static_cast<int>(std::ceil(width / cell_size - 1e-9)));
  spec.height =
      std::max(1, static_cast<int>(std::ceil(height / cell_size - 1e-9)));
  return spec;
}

double Grid::Sum() const {
  return std::accumulate(cells_.begin(), cells_.end(), 0.0);
}

absl::Status StampImprint(Heatmap& map, Point2 center, double tool_radius,
                          double mass) {
  if (absl::Status s = CheckStampArgs(center, tool_radius, mass);
      !s.ok()) {
    return s;
  }
  const GridSpec& spec = map.grid.spec();
  const double sigma = ImprintSigma(tool_radius);
  thread_local std::vector<double> wx;
  thread_local std::vector<double> wy;
  const int x0 = AxisWeights(center.x, sigma, spec.origin.x, spec.cell_size,
                             spec.width, wx);
  const int y0 = AxisWeights(center.y, sigma, spec.origin.y, spec.cell_size,
                             spec.height, wy);
  for (size_t j = 0; j < wy.size(); ++j) {
    const double row = mass * wy[j];
    if (row == 0.0) continue;
    for (size_t i = 0; i < wx.size(); ++i) {
      map.grid.at(x0 + static_cast<int>(i), y0 + static_cast<int>(j)) +=
          row * wx[i];
    }
  }
  return absl::OkStatus();
}

absl::Status StampImprintSampled(Heatmap& map, Point2 center,
                                 double tool_radius, double mass,
                                 int particles, Rng& rng) {
  if (absl::Status s = CheckStampArgs(center, tool_radius, mass);
      !s.ok()) {
    return s;
  }
  if (particles < 1) {
    return absl::InvalidArgumentError("particles must be >= 1");
  }
  const GridSpec& spec = map.grid.spec();
  const double sigma = ImprintSigma(tool_radius);
  const double hit = mass / particles;
  auto draw = [&rng]() {
    double g;
    do {
      g = rng.Gaussian();
    } while (std::abs(g) > kTruncation);
    return g;
  };
  for (int k = 0; k < particles; ++k) {
    const double x = center.x + sigma * draw();
    const double y = center.y + sigma * draw();
    const double fx = std::floor((x - spec.origin.x) / spec.cell_size);
    const double fy = std::floor((y - spec.origin.y) / spec.cell_size);
    if (fx < 0 || fy < 0 || fx >= spec.width || fy >= spec.height) continue;
    map.grid.at(static_cast<int>(fx), static_cast<int>(fy)) += hit;
  }
  return absl::OkStatus();
}

absl::StatusOr<Heatmap> ReplayTrajectory(const TrajectoryLog& log,
                                         double tool_radius,
                                         double mass_per_sample,
                                         const GridSpec& grid) {
  if (log.samples.empty()) {
    return absl::InvalidArgumentError("cannot replay an empty trajectory log");
  }
  if (absl::Status s = ValidateGridSpec(grid); !s.ok()) return s;
  Heatmap map{Grid(grid)};
  for (const Pose& p : log.samples) {
    if (absl::Status s =
            StampImprint(map, {p.x, p.y}, tool_radius, mass_per_sample);
        !s.ok()) {
      return s;
    }
  }
  return map;
}

absl::StatusOr<DeviationMap> ComputeDeviationMap(const Heatmap& map,
                                                 int window) {
  if (window < 1 || window % 2 == 0) {
    return absl::InvalidArgumentError(
        absl::StrCat("deviation window must be odd and >= 1, got ", window));
  }
  const Grid& src = map.grid;
  const int w = src.width();
  const int h = src.height();
  const int half = window / 2;
  // Separable box sums, summed directly so rounding stays local.
  std::vector<double> rows(static_cast<size_t>(w) * h, 0.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double sum = 0.0;
      for (int k = std::max(0, x - half); k <= std::min(w - 1, x + half); ++k) {
        sum += src.at(k, y);
      }
      rows[static_cast<size_t>(y) * w + x] = sum;
    }
  }
  DeviationMap out{Grid(src.spec()), window, src.Sum()};
  for (int y = 0; y < h; ++y) {
    const int ya = std::max(0, y - half);
    const int yb = std::min(h - 1, y + half);
    for (int x = 0; x < w; ++x) {
      const int xa = std::max(0, x - half);
      const int xb = std::min(w - 1, x + half);
      double total = 0.0;
      for (int k = ya; k <= yb; ++k) {
        total += rows[static_cast<size_t>(k) * w + x];
      }
      const double count = static_cast<double>(xb - xa + 1) * (yb - ya + 1);
      out.grid.at(x, y) = src.at(x, y) - total / count;
    }
  }
  return out;
}

int DefaultDeviationWindow(double tool_radius, const GridSpec& grid) {
  int window = static_cast<int>(std::lround(8.0 * tool_radius / grid.cell_size));
  if (window % 2 == 0) ++window;
  int cap = std::max(grid.width, grid.height);
  if (cap % 2 == 0) --cap;
  return std::clamp(window, 1, std::max(1, cap));
}

void WriteGridText(const Grid& grid, std::ostream& os) {
  for (int y = 0; y < grid.height(); ++y) {
    for (int x = 0; x < grid.width(); ++x) {
      if (x > 0) os << ' ';
      os << FormatDouble(grid.at(x, y));
    }
    os << '\n';
  }
}

absl::StatusOr<Grid> ReadGridText(std::istream& is, double cell_size) {
  std::vector<std::vector<double>> rows;
  std::string line;
  size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    std::vector<double> row;
    size_t pos = 0;
    while (pos < line.size()) {
      while (pos < line.size() &&
             (line[pos] == ' ' || line[pos] == '\t' || line[pos] == '\r')) {
        ++pos;
      }
      if (pos >= line.size()) break;
      size_t end = pos;
      while (end < line.size() && line[end] != ' ' && line[end] != '\t' &&
             line[end] != '\r') {
        ++end;
      }
      absl::StatusOr<double> v =
          ParseDouble(std::string_view(line).substr(pos, end - pos));
      if (!v.ok() || !std::isfinite(*v)) {
        return absl::InvalidArgumentError(
            absl::StrCat("line ", line_no, ": bad value"));
      }
      row.push_back(*v);
      pos = end;
    }
    if (row.empty()) continue;
    if (!rows.empty() && row.size() != rows.front().size()) {
      return absl::InvalidArgumentError(
          absl::StrCat("line ", line_no, ": expected ", rows.front().size(),
                       " values, got ", row.size()));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) return absl::InvalidArgumentError("empty grid file");
  GridSpec spec;
  spec.width = static_cast<int>(rows.front().size());
  spec.height = static_cast<int>(rows.size());
  spec.cell_size = cell_size;
  if (absl::Status s = ValidateGridSpec(spec); !s.ok()) return s;
  Grid grid(spec);
  for (int y = 0; y < spec.height; ++y) {
    for (int x = 0; x < spec.width; ++x) grid.at(x, y) = rows[y][x];
  }
  return grid;
}

void WriteGridPgm16(const Grid& grid, std::ostream& os) {
  const auto values = grid.values();
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *lo_it;
  const double span = *hi_it - lo;
  os << "P5\n" << grid.width() << ' ' << grid.height() << "\n65535\n";
  for (int y = grid.height() - 1; y >= 0; --y) {
    for (int x = 0; x < grid.width(); ++x) {
      const double scaled =
          span > 0.0 ? (grid.at(x, y) - lo) / span * 65535.0 : 0.0;
      const auto v = static_cast<uint16_t>(
          std::clamp(std::lround(scaled), 0L, 65535L));
      os.put(static_cast<char>(v >> 8));
      os.put(static_cast<char>(v & 0xff));
    }
  }
}

}  // namespace sandqos
