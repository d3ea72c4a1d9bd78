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

#include "sandqos/quality.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "absl/strings/str_cat.h"
#include "sandqos/text_format.h"

namespace sandqos {
namespace {


double MaxAbs(const Grid& g) {
  double m = 0.0;
  for (double v : g.values()) m = std::max(m, std::abs(v));
  return m;
}

}  // namespace

absl::StatusOr<TransportInstance> BuildTransport(const DeviationMap& dev) {
  const Grid& g = dev.grid;
  const double zero_tol = 1e-12 * MaxAbs(g);
  TransportInstance inst;
  double supply_total = 0.0;
  double demand_total = 0.0;
  for (int y = 0; y < g.height(); ++y) {
    for (int x = 0; x < g.width(); ++x) {
      const double v = g.at(x, y);
      if (!std::isfinite(v)) {
        return absl::InvalidArgumentError("deviation map has non-finite cells");
      }
      if (std::abs(v) <= zero_tol) continue;
      TransportNode node{g.CellCenter(x, y), std::abs(v), y * g.width() + x};
      if (v > 0.0) {
        inst.supplies.push_back(node);
        supply_total += node.mass;
      } else {
        inst.demands.push_back(node);
        demand_total += node.mass;
      }
    }
  }
  if (inst.supplies.empty() || inst.demands.empty()) {
    // One-sided maps only arise from rounding noise around zero.
    return TransportInstance{};
  }
  const double common = 0.5 * (supply_total + demand_total);
  for (TransportNode& n : inst.supplies) n.mass *= common / supply_total;
  for (TransportNode& n : inst.demands) n.mass *= common / demand_total;
  return inst;
}

absl::StatusOr<TransportSolution> SolveTransport(
    const TransportInstance& inst) {
  const size_t ns = inst.supplies.size();
  const size_t nd = inst.demands.size();
  double supply_total = 0.0;
  double demand_total = 0.0;
  for (const TransportNode& n : inst.supplies) {
    if (!(n.mass >= 0.0) || !std::isfinite(n.mass)) {
      return absl::InvalidArgumentError("supply masses must be finite and >= 0");
    }
    supply_total += n.mass;
  }
  for (const TransportNode& n : inst.demands) {
    if (!(n.mass >= 0.0) || !std::isfinite(n.mass)) {
      return absl::InvalidArgumentError("demand masses must be finite and >= 0");
    }
    demand_total += n.mass;
  }
  const double scale = std::max({1.0, supply_total, demand_total});
  if (std::abs(supply_total - demand_total) > 1e-9 * scale) {
    return absl::InvalidArgumentError(
        absl::StrCat("unbalanced instance: supply ", supply_total,
                     " vs demand ", demand_total));
  }
  if (ns * nd > kMaxTransportArcs) {
    return absl::ResourceExhaustedError(
        absl::StrCat("transport instance has ", ns * nd, " arcs (limit ",
                     kMaxTransportArcs, ")"));
  }
  TransportSolution solution;
  if (ns == 0 || nd == 0) return solution;

  const double eps = 1e-14 * scale;
  std::vector<double> cost(ns * nd);
  double max_cost = 0.0;
  for (size_t i = 0; i < ns; ++i) {
    for (size_t j = 0; j < nd; ++j) {
      const Point2 a = inst.supplies[i].position;
      const Point2 b = inst.demands[j].position;
      cost[i * nd + j] = std::hypot(a.x - b.x, a.y - b.y);
      max_cost = std::max(max_cost, cost[i * nd + j]);
    }
  }
  const double tol = 1e-12 * std::max(1.0, max_cost);

  // Transportation simplex. The basis is a spanning tree over the ns + nd
  // nodes (supplies 0..ns-1, demands ns..ns+nd-1) with one basic cell per
  // tree edge; the northwest-corner rule gives the first one.
  struct Cell {
    size_t i;
    size_t j;
    double flow;
  };
  const size_t nodes = ns + nd;
  std::vector<Cell> basis;
  basis.reserve(nodes - 1);
  {
    std::vector<double> left(ns);
    std::vector<double> need(nd);
    for (size_t i = 0; i < ns; ++i) left[i] = inst.supplies[i].mass;
    for (size_t j = 0; j < nd; ++j) need[j] = inst.demands[j].mass;
    size_t i = 0;
    size_t j = 0;
    while (true) {
      const double x = std::max(0.0, std::min(left[i], need[j]));
      basis.push_back({i, j, x});
      left[i] -= x;
      need[j] -= x;
      if (i == ns - 1 && j == nd - 1) break;
      if (i == ns - 1) {
        ++j;
      } else if (j == nd - 1 || left[i] < need[j]) {
        ++i;
      } else {
        ++j;
      }
    }
  }

  std::vector<std::vector<size_t>> adj(nodes);  // basic cells per node
  for (size_t k = 0; k < basis.size(); ++k) {
    adj[basis[k].i].push_back(k);
    adj[ns + basis[k].j].push_back(k);
  }
  auto unlink = [&adj](size_t node, size_t k) {
    std::vector<size_t>& a = adj[node];
    *std::find(a.begin(), a.end(), k) = a.back();
    a.pop_back();
  };

  std::vector<double> dual(nodes);         // u for supplies, v for demands
  std::vector<size_t> up_cell(nodes);      // tree edge towards node 0
  std::vector<size_t> up_node(nodes);
  std::vector<size_t> depth(nodes);
  std::vector<size_t> order;
  order.reserve(nodes);
  auto node_of = [ns](const Cell& c, size_t from) {
    return from == c.i ? ns + c.j : c.i;
  };
  // Duals from u_0 = 0 and u_i + v_j = c_ij on basic cells.
  auto solve_duals = [&]() {
    order.assign(1, 0);
    dual[0] = 0.0;
    depth[0] = 0;
    up_node[0] = 0;
    for (size_t h = 0; h < order.size(); ++h) {
      const size_t n = order[h];
      for (size_t k : adj[n]) {
        const size_t m = node_of(basis[k], n);
        if (n != 0 && k == up_cell[n]) continue;
        up_node[m] = n;
        up_cell[m] = k;
        depth[m] = depth[n] + 1;
        dual[m] = cost[basis[k].i * nd + basis[k].j] - dual[n];
        order.push_back(m);
      }
    }
  };

  const size_t arcs = ns * nd;
  const size_t block =
      std::max<size_t>(32, static_cast<size_t>(std::sqrt(static_cast<double>(arcs))));
  size_t cursor = 0;
  std::vector<size_t> minus;
  std::vector<size_t> plus;
  const size_t max_pivots = 200 * nodes * nodes + 1000;
  bool optimal = false;
  for (size_t pivot = 0; pivot < max_pivots; ++pivot) {
    solve_duals();
    // Block search for the entering cell.
    size_t enter = arcs;
    double best = -tol;
    for (size_t scanned = 0; scanned < arcs;) {
      const size_t stop = std::min(arcs, scanned + block);
      for (; scanned < stop; ++scanned) {
        const size_t e = cursor;
        cursor = cursor + 1 == arcs ? 0 : cursor + 1;
        const size_t i = e / nd;
        const size_t j = e % nd;
        const double rc = cost[e] - dual[i] - dual[ns + j];
        if (rc < best) {
          best = rc;
          enter = e;
        }
      }
      if (enter != arcs) break;
    }
    if (enter == arcs) {
      optimal = true;
      break;
    }
    const size_t ei = enter / nd;
    const size_t ej = enter % nd;
    // Tree path from demand ej to supply ei; its cells alternate -, +, ...
    // starting at the demand end.
    minus.clear();
    plus.clear();
    {
      size_t a = ns + ej;
      size_t b = ei;
      std::vector<size_t> from_a;
      std::vector<size_t> from_b;
      while (a != b) {
        if (depth[a] >= depth[b]) {
          from_a.push_back(up_cell[a]);
          a = up_node[a];
        } else {
          from_b.push_back(up_cell[b]);
          b = up_node[b];
        }
      }
      from_a.insert(from_a.end(), from_b.rbegin(), from_b.rend());
      for (size_t k = 0; k < from_a.size(); ++k) {
        (k % 2 == 0 ? minus : plus).push_back(from_a[k]);
      }
    }
    size_t leave = minus.front();
    for (size_t k : minus) {
      if (basis[k].flow < basis[leave].flow) leave = k;
    }
    const double theta = basis[leave].flow;
    for (size_t k : minus) basis[k].flow = std::max(0.0, basis[k].flow - theta);
    for (size_t k : plus) basis[k].flow += theta;
    unlink(basis[leave].i, leave);
    unlink(ns + basis[leave].j, leave);
    basis[leave] = {ei, ej, theta};
    adj[ei].push_back(leave);
    adj[ns + ej].push_back(leave);
  }
  if (!optimal) {
    return absl::InternalError("transport simplex did not converge");
  }

  std::sort(basis.begin(), basis.end(), [](const Cell& a, const Cell& b) {
    return a.i != b.i ? a.i < b.i : a.j < b.j;
  });
  for (const Cell& c : basis) {
    if (c.flow <= eps) continue;
    solution.cost += c.flow * cost[c.i * nd + c.j];
    solution.flows.push_back(
        {static_cast<int>(c.i), static_cast<int>(c.j), c.flow});
  }
  return solution;
}

absl::StatusOr<double> EmdExact(const TransportInstance& inst) {
  absl::StatusOr<TransportSolution> sol = SolveTransport(inst);
  if (!sol.ok()) return sol.status();
  return sol->cost;
}

absl::StatusOr<DeviationMap> DownsampleDeviation(const DeviationMap& dev,
                                                 int factor) {
  if (factor < 1) {
    return absl::InvalidArgumentError(
        absl::StrCat("downsample factor must be >= 1, got ", factor));
  }
  if (factor == 1) return dev;
  const Grid& src = dev.grid;
  GridSpec spec = src.spec();
  spec.width = (src.width() + factor - 1) / factor;
  spec.height = (src.height() + factor - 1) / factor;
  spec.cell_size = src.cell_size() * factor;
  DeviationMap out{Grid(spec), dev.window, dev.source_mass};
  for (int y = 0; y < src.height(); ++y) {
    for (int x = 0; x < src.width(); ++x) {
      out.grid.at(x / factor, y / factor) += src.at(x, y);
    }
  }
  return out;
}

int DefaultDownsample(const GridSpec& grid, int max_side) {
  const int side = std::max(grid.width, grid.height);
  return std::max(1, (side + max_side - 1) / max_side);
}

absl::StatusOr<ProductQuality> ScoreProduct(const DeviationMap& dev,
                                            int downsample, double tool_radius,
                                            const NetworkConditions& cond) {
  absl::StatusOr<DeviationMap> coarse = DownsampleDeviation(dev, downsample);
  if (!coarse.ok()) return coarse.status();
  absl::StatusOr<TransportInstance> inst = BuildTransport(*coarse);
  if (!inst.ok()) return inst.status();
  if (inst->supplies.size() * inst->demands.size() > kMaxTransportArcs) {
    return absl::ResourceExhaustedError(absl::StrCat(
        "grid ", coarse->grid.width(), "x", coarse->grid.height(),
        " is too large after downsampling by ", downsample));
  }
  absl::StatusOr<double> work = EmdExact(*inst);
  if (!work.ok()) return work.status();
  ProductQuality q;
  q.work = *work;
  q.removed_mass = dev.source_mass;
  q.emd = dev.source_mass > 0.0 ? *work / dev.source_mass : *work;
  q.grid_width = coarse->grid.width();
  q.grid_height = coarse->grid.height();
  q.downsample = downsample;
  q.tool_radius = tool_radius;
  q.conditions = cond;
  return q;
}

std::string QualityTableHeader() {
  return "tool_radius,delay_ms,jitter_ms,loss,emd";
}

std::string QualityTableRow(const ProductQuality& q) {
  return absl::StrCat(FormatDouble(q.tool_radius), ",",
                      FormatDouble(q.conditions.delay_ms), ",",
                      FormatDouble(q.conditions.jitter_ms), ",",
                      FormatDouble(q.conditions.loss_rate), ",",
                      FormatDouble(q.emd));
}

}  // namespace sandqos
