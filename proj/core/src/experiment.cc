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

#include "sandqos/experiment.h"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <thread>
#include <utility>

#include "absl/strings/str_cat.h"
#include "sandqos/serialize.h"
#include "sandqos/text_format.h"

namespace sandqos {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr double kRadiusMatch = 1e-9;

absl::Status ValidateCustomerSpec(const UtilitySpec& spec) {
  if (absl::Status s = ValidateUtilitySpec(spec); !s.ok()) return s;
  for (const KpiRequirement& r : spec.requirements) {
    if (r.kpi_name != "emd" && r.kpi_name != "material_score" &&
        r.kpi_name != "tool_score") {
      return absl::InvalidArgumentError(absl::StrCat(
          "customer_utility: unknown factor '", r.kpi_name, "'"));
    }
  }
  return absl::OkStatus();
}

absl::Status ValidateRobotSpec(const UtilitySpec& spec, Phase phase) {
  if (absl::Status s = ValidateUtilitySpec(spec); !s.ok()) return s;
  if (spec.phase != phase) {
    return absl::InvalidArgumentError(
        "robot_utility.phase must match the configured phase");
  }
  RobotKpis probe;
  for (const KpiRequirement& r : spec.requirements) {
    if (!KpiValue(probe, r.kpi_name).ok()) {
      return absl::InvalidArgumentError(
          absl::StrCat("robot_utility: unknown KPI '", r.kpi_name, "'"));
    }
  }
  return absl::OkStatus();
}

absl::Status CheckPositive(double v, std::string_view name) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    return absl::InvalidArgumentError(
        absl::StrCat(std::string(name), " must be > 0"));
  }
  return absl::OkStatus();
}

std::string Fnv1a64Hex(std::string_view data) {
  uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

absl::Status WriteFile(const fs::path& path,
                       const std::function<void(std::ostream&)>& body) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) {
    return absl::UnavailableError(
        absl::StrCat("cannot open ", path.string(), " for writing"));
  }
  body(os);
  os.flush();
  if (!os) {
    return absl::DataLossError(absl::StrCat("write failed: ", path.string()));
  }
  return absl::OkStatus();
}

absl::StatusOr<std::string> ReadFile(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) {
    return absl::NotFoundError(absl::StrCat("cannot open ", path.string()));
  }
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

json RowToJson(const SweepRow& row) {
  return json{{"tool_radius", row.tool_radius}, {"delay_ms", row.delay_ms},
              {"jitter_ms", row.jitter_ms},     {"loss", row.loss},
              {"emd", row.emd},                 {"seed", row.seed},
              {"kpis", ToJson(row.kpis)}};
}

absl::StatusOr<SweepRow> RowFromJson(const json& j) {
  SweepRow row;
  JsonReader r(j, "row");
  r.Double("tool_radius", row.tool_radius, true);
  r.Double("delay_ms", row.delay_ms, true);
  r.Double("jitter_ms", row.jitter_ms, true);
  r.Double("loss", row.loss, true);
  r.Double("emd", row.emd, true);
  r.Uint64("seed", row.seed, true);
  const json* kpis = r.Member("kpis", true);
  if (absl::Status s = r.Finish(); !s.ok()) return s;
  absl::StatusOr<RobotKpis> k = RobotKpisFromJson(*kpis);
  if (!k.ok()) return k.status();
  row.kpis = *k;
  return row;
}

std::vector<ExperimentConfig> SweepPoints(const ExperimentConfig& config) {
  std::vector<ExperimentConfig> points;
  for (double r : config.sweep.tool_radii_mm) {
    for (double d : config.sweep.delays_ms) {
      for (uint64_t seed : config.sweep.seeds) {
        ExperimentConfig c = config;
        c.tool_radius_mm = r;
        c.network.delay_ms = d;
        c.network.seed = seed;
        points.push_back(std::move(c));
      }
    }
  }
  return points;
}

// Runs fn(i) for i in [0, n) on up to `workers` threads.
void ParallelFor(size_t n, int workers,
                 const std::function<void(size_t)>& fn) {
  if (workers <= 0) {
    workers = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  }
  const size_t count = std::min(n, static_cast<size_t>(workers));
  if (count <= 1) {
    for (size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<size_t> next{0};
  std::vector<std::thread> threads;
  for (size_t t = 0; t < count; ++t) {
    threads.emplace_back([&] {
      for (size_t i; (i = next.fetch_add(1)) < n;) fn(i);
    });
  }
  for (std::thread& t : threads) t.join();
}

absl::StatusOr<SweepRow> RunPoint(const ExperimentConfig& point,
                                  const fs::path& runs_dir) {
  const fs::path dir = runs_dir / RunKey(point);
  if (absl::StatusOr<std::string> text = ReadFile(dir / "summary.json");
      text.ok()) {
    absl::StatusOr<json> j = ParseJson(*text);
    if (j.ok() && j->is_object() && j->contains("row") &&
        j->value("run_key", "") == RunKey(point)) {
      absl::StatusOr<SweepRow> row = RowFromJson((*j)["row"]);
      if (row.ok()) return row;
    }
  }
  absl::StatusOr<RunResult> result = RunOnce(point, dir);
  if (!result.ok()) return result.status();
  return RowFor(point, *result);
}

absl::StatusOr<std::vector<SweepRow>> RunSweep(
    const ExperimentConfig& config, int workers,
    const std::optional<fs::path>& runs_dir) {
  if (absl::Status s = ValidateConfig(config); !s.ok()) return s;
  for (double d : config.sweep.delays_ms) {
    if (config.network.jitter_ms > d) {
      return absl::InvalidArgumentError(absl::StrCat(
          "sweep delay ", d, " ms is below jitter_ms ",
          config.network.jitter_ms));
    }
  }
  const std::vector<ExperimentConfig> points = SweepPoints(config);
  if (points.empty()) return absl::InvalidArgumentError("empty sweep");
  std::vector<absl::StatusOr<SweepRow>> results(
      points.size(), absl::UnknownError("not run"));
  ParallelFor(points.size(), workers, [&](size_t i) {
    if (runs_dir.has_value()) {
      results[i] = RunPoint(points[i], *runs_dir);
      return;
    }
    absl::StatusOr<RunResult> r = Simulate(points[i]);
    results[i] = r.ok() ? absl::StatusOr<SweepRow>(RowFor(points[i], *r))
                        : absl::StatusOr<SweepRow>(r.status());
  });
  std::vector<SweepRow> rows;
  for (size_t i = 0; i < results.size(); ++i) {
    if (!results[i].ok()) {
      absl::Status s = results[i].status();
      return absl::Status(
          s.code(), absl::StrCat("sweep point ", i, " (tool_radius ",
                                 points[i].tool_radius_mm, ", delay_ms ",
                                 points[i].network.delay_ms, "): ",
                                 std::string(s.message())));
    }
    rows.push_back(*results[i]);
  }
  return rows;
}

}  // namespace

absl::Status ValidateConfig(const ExperimentConfig& c) {
  if (absl::Status s = CheckPositive(c.surface_width_mm, "surface_width_mm");
      !s.ok()) {
    return s;
  }
  if (absl::Status s = CheckPositive(c.surface_height_mm, "surface_height_mm");
      !s.ok()) {
    return s;
  }
  std::vector<double> radii = c.sweep.tool_radii_mm;
  radii.push_back(c.tool_radius_mm);
  for (double r : radii) {
    if (absl::Status s = CheckPositive(r, "tool_radius_mm"); !s.ok()) return s;
    if (!(c.surface_width_mm > 2.0 * r) || !(c.surface_height_mm > 2.0 * r)) {
      return absl::InvalidArgumentError(absl::StrCat(
          "surface ", c.surface_width_mm, " x ", c.surface_height_mm,
          " mm is smaller than a tool of radius ", r, " mm"));
    }
  }
  if (!(c.overlap >= 0.0 && c.overlap < 1.0)) {
    return absl::InvalidArgumentError("overlap must lie in [0, 1)");
  }
  if (!(c.overtravel_tool_radii >= 0.0) ||
      !std::isfinite(c.overtravel_tool_radii)) {
    return absl::InvalidArgumentError("overtravel_tool_radii must be >= 0");
  }
  for (auto [v, name] : {std::pair{c.nominal_speed_mm_s, "nominal_speed_mm_s"},
                         std::pair{c.cell_size_mm, "cell_size_mm"},
                         std::pair{c.mass_per_sample, "mass_per_sample"},
                         std::pair{c.duration_limit_s, "duration_limit_s"},
                         std::pair{c.resolution_mm, "resolution_mm"}}) {
    if (absl::Status s = CheckPositive(v, name); !s.ok()) return s;
  }
  if (!std::isfinite(c.z_ref_mm)) {
    return absl::InvalidArgumentError("z_ref_mm must be finite");
  }
  if (c.deviation_window_cells.has_value() &&
      (*c.deviation_window_cells < 1 || *c.deviation_window_cells % 2 == 0)) {
    return absl::InvalidArgumentError(
        "deviation_window_cells must be odd and >= 1");
  }
  if (c.downsample.has_value() && *c.downsample < 1) {
    return absl::InvalidArgumentError("downsample must be >= 1");
  }
  if (c.command_payload_bytes < 0) {
    return absl::InvalidArgumentError("command_payload_bytes must be >= 0");
  }
  if (absl::Status s = ValidateController(c.controller); !s.ok()) return s;
  if (absl::Status s = ValidateConditions(c.network); !s.ok()) return s;
  for (double d : c.sweep.delays_ms) {
    if (!(d >= 0.0) || !std::isfinite(d)) {
      return absl::InvalidArgumentError(
          absl::StrCat("sweep delay ", d, " ms must be finite and >= 0"));
    }
  }
  if (c.sweep.delays_ms.empty() || c.sweep.tool_radii_mm.empty() ||
      c.sweep.seeds.empty()) {
    return absl::InvalidArgumentError(
        "sweep needs at least one delay, tool radius and seed");
  }
  if (absl::Status s = ValidateRobotSpec(c.robot_utility, c.phase); !s.ok()) {
    return s;
  }
  if (absl::Status s = ValidateCustomerSpec(c.customer_utility); !s.ok()) {
    return s;
  }
  if (absl::Status s = ValidateExogenous(c.exogenous); !s.ok()) return s;
  if (absl::Status s = ValidateCaps(c.caps); !s.ok()) return s;
  if (absl::Status s = ValidateRequirements(c.nrm_defaults); !s.ok()) return s;
  if (!(c.demo.initial_latency_ms >= 0.0) ||
      !std::isfinite(c.demo.initial_latency_ms) || c.demo.max_rounds < 0) {
    return absl::InvalidArgumentError(
        "demo needs initial_latency_ms >= 0 and max_rounds >= 0");
  }
  if (c.demo.val_ues.empty() || !IsValidIpAddress(c.demo.ip_address)) {
    return absl::InvalidArgumentError(
        "demo needs a VAL UE list and a valid IP address");
  }
  if (c.output_dir.empty()) {
    return absl::InvalidArgumentError("output_dir must not be empty");
  }
  return absl::OkStatus();
}

json ToJson(const ExperimentConfig& c) {
  json j;
  j["surface_width_mm"] = c.surface_width_mm;
  j["surface_height_mm"] = c.surface_height_mm;
  j["tool_radius_mm"] = c.tool_radius_mm;
  j["overlap"] = c.overlap;
  j["overtravel_tool_radii"] = c.overtravel_tool_radii;
  j["nominal_speed_mm_s"] = c.nominal_speed_mm_s;
  j["z_ref_mm"] = c.z_ref_mm;
  j["cell_size_mm"] = c.cell_size_mm;
  j["deviation_window_cells"] = c.deviation_window_cells.has_value()
                                    ? json(*c.deviation_window_cells)
                                    : json(nullptr);
  j["downsample"] =
      c.downsample.has_value() ? json(*c.downsample) : json(nullptr);
  j["mass_per_sample"] = c.mass_per_sample;
  j["duration_limit_s"] = c.duration_limit_s;
  j["resolution_mm"] = c.resolution_mm;
  j["symmetric_delay"] = c.symmetric_delay;
  j["command_payload_bytes"] = c.command_payload_bytes;
  j["phase"] = std::string(PhaseName(c.phase));
  j["controller"] = ToJson(c.controller);
  j["network"] = ToJson(c.network);
  j["sweep"] = json{{"delays_ms", c.sweep.delays_ms},
                    {"tool_radii_mm", c.sweep.tool_radii_mm},
                    {"seeds", c.sweep.seeds}};
  j["robot_utility"] = ToJson(c.robot_utility);
  j["customer_utility"] = ToJson(c.customer_utility);
  j["exogenous"] = ToJson(c.exogenous);
  j["nrm"] = json{{"min_latency_ms", c.caps.min_latency_ms},
                  {"max_latency_ms", c.caps.max_latency_ms},
                  {"max_bandwidth_kbps", c.caps.max_bandwidth_kbps},
                  {"default_loss_rate", c.nrm_defaults.loss_rate},
                  {"default_bandwidth_kbps", c.nrm_defaults.bandwidth_kbps}};
  j["demo"] = json{{"initial_latency_ms", c.demo.initial_latency_ms},
                   {"max_rounds", c.demo.max_rounds},
                   {"val_ues", c.demo.val_ues},
                   {"ip_address", c.demo.ip_address}};
  j["output_dir"] = c.output_dir;
  return j;
}

absl::StatusOr<ExperimentConfig> ConfigFromJson(const json& j) {
  ExperimentConfig c;
  JsonReader r(j, "config");
  std::string comment;
  r.String("comment", comment, false);
  r.Double("surface_width_mm", c.surface_width_mm, false);
  r.Double("surface_height_mm", c.surface_height_mm, false);
  r.Double("tool_radius_mm", c.tool_radius_mm, false);
  r.Double("overlap", c.overlap, false);
  r.Double("overtravel_tool_radii", c.overtravel_tool_radii, false);
  r.Double("nominal_speed_mm_s", c.nominal_speed_mm_s, false);
  r.Double("z_ref_mm", c.z_ref_mm, false);
  r.Double("cell_size_mm", c.cell_size_mm, false);
  if (const json* w = r.Member("deviation_window_cells", false);
      w != nullptr && !w->is_null()) {
    int v = 0;
    const json holder{{"v", *w}};
    JsonReader wr(holder, "config.deviation_window_cells");
    wr.Int("v", v, true);
    if (absl::Status s = wr.Finish(); !s.ok()) return s;
    c.deviation_window_cells = v;
  }
  if (const json* d = r.Member("downsample", false);
      d != nullptr && !d->is_null()) {
    int v = 0;
    const json holder{{"v", *d}};
    JsonReader dr(holder, "config.downsample");
    dr.Int("v", v, true);
    if (absl::Status s = dr.Finish(); !s.ok()) return s;
    c.downsample = v;
  }
  r.Double("mass_per_sample", c.mass_per_sample, false);
  r.Double("duration_limit_s", c.duration_limit_s, false);
  r.Double("resolution_mm", c.resolution_mm, false);
  r.Bool("symmetric_delay", c.symmetric_delay, false);
  r.Int("command_payload_bytes", c.command_payload_bytes, false);
  std::string phase(PhaseName(c.phase));
  r.String("phase", phase, false);
  r.String("output_dir", c.output_dir, false);
  const json* controller = r.Member("controller", false);
  const json* network = r.Member("network", false);
  const json* sweep = r.Member("sweep", false);
  const json* robot = r.Member("robot_utility", false);
  const json* customer = r.Member("customer_utility", false);
  const json* exogenous = r.Member("exogenous", false);
  const json* nrm = r.Member("nrm", false);
  const json* demo = r.Member("demo", false);
  if (absl::Status s = r.Finish(); !s.ok()) return s;

  absl::StatusOr<Phase> p = ParsePhase(phase);
  if (!p.ok()) return p.status();
  c.phase = *p;
  if (c.phase == Phase::kScanning && robot == nullptr) {
    c.robot_utility = DefaultScanningSpec();
  }
  if (controller != nullptr) {
    if (absl::Status s = MergeFromJson(*controller, c.controller); !s.ok()) {
      return s;
    }
  }
  if (network != nullptr) {
    if (absl::Status s = MergeFromJson(*network, c.network); !s.ok()) return s;
  }
  if (sweep != nullptr) {
    JsonReader sr(*sweep, "config.sweep");
    sr.DoubleList("delays_ms", c.sweep.delays_ms, false);
    sr.DoubleList("tool_radii_mm", c.sweep.tool_radii_mm, false);
    sr.Uint64List("seeds", c.sweep.seeds, false);
    if (absl::Status s = sr.Finish(); !s.ok()) return s;
  }
  if (robot != nullptr) {
    absl::StatusOr<UtilitySpec> u = UtilitySpecFromJson(*robot);
    if (!u.ok()) return u.status();
    c.robot_utility = *u;
  }
  if (customer != nullptr) {
    absl::StatusOr<UtilitySpec> u = UtilitySpecFromJson(*customer);
    if (!u.ok()) return u.status();
    c.customer_utility = *u;
  }
  if (exogenous != nullptr) {
    if (absl::Status s = MergeFromJson(*exogenous, c.exogenous); !s.ok()) {
      return s;
    }
  }
  if (nrm != nullptr) {
    JsonReader nr(*nrm, "config.nrm");
    nr.Double("min_latency_ms", c.caps.min_latency_ms, false);
    nr.Double("max_latency_ms", c.caps.max_latency_ms, false);
    nr.Double("max_bandwidth_kbps", c.caps.max_bandwidth_kbps, false);
    nr.Double("default_loss_rate", c.nrm_defaults.loss_rate, false);
    nr.Double("default_bandwidth_kbps", c.nrm_defaults.bandwidth_kbps, false);
    if (absl::Status s = nr.Finish(); !s.ok()) return s;
  }
  if (demo != nullptr) {
    JsonReader dr(*demo, "config.demo");
    dr.Double("initial_latency_ms", c.demo.initial_latency_ms, false);
    dr.Int("max_rounds", c.demo.max_rounds, false);
    dr.StringList("val_ues", c.demo.val_ues, false);
    dr.String("ip_address", c.demo.ip_address, false);
    if (absl::Status s = dr.Finish(); !s.ok()) return s;
  }
  if (absl::Status s = ValidateConfig(c); !s.ok()) return s;
  return c;
}

absl::StatusOr<ExperimentConfig> LoadConfig(const std::string& path) {
  std::string p = path;
  if (p.empty()) {
    const char* env = std::getenv(kConfigEnvVar);
    if (env != nullptr) p = env;
  }
  if (p.empty()) return ExperimentConfig{};
  absl::StatusOr<std::string> text = ReadFile(p);
  if (!text.ok()) return text.status();
  absl::StatusOr<json> j = ParseJson(*text);
  if (!j.ok()) {
    return absl::InvalidArgumentError(absl::StrCat(p, ": malformed JSON"));
  }
  absl::StatusOr<ExperimentConfig> c = ConfigFromJson(*j);
  if (!c.ok()) {
    return absl::Status(c.status().code(),
                        absl::StrCat(p, ": ", std::string(c.status().message())));
  }
  return c;
}

std::string RunKey(const ExperimentConfig& config) {
  json j = ToJson(config);
  for (const char* key : {"sweep", "nrm", "demo", "output_dir"}) j.erase(key);
  return Fnv1a64Hex(j.dump());
}

absl::StatusOr<PlannedTrajectory> PlanFor(const ExperimentConfig& c) {
  return PlanRasterWithOvertravel(
      c.surface_width_mm, c.surface_height_mm, c.tool_radius_mm, c.overlap,
      c.overtravel_tool_radii * c.tool_radius_mm, c.nominal_speed_mm_s,
      c.z_ref_mm);
}

GridSpec GridFor(const ExperimentConfig& c) {
  return GridForSurface(c.surface_width_mm, c.surface_height_mm,
                        c.cell_size_mm);
}

absl::StatusOr<RunResult> Simulate(const ExperimentConfig& c) {
  if (absl::Status s = ValidateConfig(c); !s.ok()) return s;
  RunResult out;
  absl::StatusOr<PlannedTrajectory> plan = PlanFor(c);
  if (!plan.ok()) return plan.status();
  out.plan = *std::move(plan);
  SimulationOptions options;
  options.symmetric_delay = c.symmetric_delay;
  options.command_payload_bytes = static_cast<size_t>(c.command_payload_bytes);
  options.resolution_mm = c.resolution_mm;
  absl::StatusOr<FollowResult> follow = SimulateFollow(
      out.plan, c.controller, c.network, c.duration_limit_s, options);
  if (!follow.ok()) return follow.status();
  out.follow = *std::move(follow);
  const GridSpec grid = GridFor(c);
  absl::StatusOr<Heatmap> heat = ReplayTrajectory(
      out.follow.log, c.tool_radius_mm, c.mass_per_sample, grid);
  if (!heat.ok()) return heat.status();
  out.heatmap = *std::move(heat);
  const int window = c.deviation_window_cells.value_or(
      DefaultDeviationWindow(c.tool_radius_mm, grid));
  absl::StatusOr<DeviationMap> dev = ComputeDeviationMap(out.heatmap, window);
  if (!dev.ok()) return dev.status();
  out.deviation = *std::move(dev);
  absl::StatusOr<ProductQuality> q =
      ScoreProduct(out.deviation, c.downsample.value_or(DefaultDownsample(grid)),
                   c.tool_radius_mm, c.network);
  if (!q.ok()) return q.status();
  out.quality = *q;
  absl::StatusOr<RobotKpis> k =
      ComputeKpis(out.plan, out.follow.log, out.follow.timed, c.phase);
  if (!k.ok()) return k.status();
  out.kpis = *k;
  absl::StatusOr<Emos> er = EmosRobot(out.kpis, c.robot_utility);
  if (!er.ok()) return er.status();
  out.emos_robot = er->value();
  absl::StatusOr<Emos> ec =
      EmosCustomer(out.quality, c.exogenous, c.customer_utility);
  if (!ec.ok()) return ec.status();
  out.emos_customer = ec->value();
  return out;
}

SweepRow RowFor(const ExperimentConfig& c, const RunResult& result) {
  SweepRow row;
  row.tool_radius = c.tool_radius_mm;
  row.delay_ms = c.network.delay_ms;
  row.jitter_ms = c.network.jitter_ms;
  row.loss = c.network.loss_rate;
  row.emd = result.quality.emd;
  row.seed = c.network.seed;
  row.kpis = result.kpis;
  return row;
}

std::string SweepTableHeader() {
  std::string h = "tool_radius,delay_ms,jitter_ms,loss,emd,seed";
  for (const std::string& name : KpiNames()) absl::StrAppend(&h, ",", name);
  return h;
}

std::string FormatSweepRow(const SweepRow& row) {
  std::string s = absl::StrCat(
      FormatDouble(row.tool_radius), ",", FormatDouble(row.delay_ms), ",",
      FormatDouble(row.jitter_ms), ",", FormatDouble(row.loss), ",",
      FormatDouble(row.emd), ",", row.seed);
  for (const std::string& name : KpiNames()) {
    absl::StrAppend(&s, ",", FormatDouble(*KpiValue(row.kpis, name)));
  }
  return s;
}

void WriteSweepTable(const std::vector<SweepRow>& rows, std::ostream& os) {
  os << SweepTableHeader() << '\n';
  for (const SweepRow& row : rows) os << FormatSweepRow(row) << '\n';
}

absl::StatusOr<std::vector<SweepRow>> ReadSweepTable(std::istream& is) {
  std::string line;
  auto trim_cr = [](std::string& s) {
    if (!s.empty() && s.back() == '\r') s.pop_back();
  };
  if (!std::getline(is, line)) {
    return absl::InvalidArgumentError("empty sweep table");
  }
  trim_cr(line);
  if (line != SweepTableHeader()) {
    return absl::InvalidArgumentError(
        absl::StrCat("unexpected sweep table header: ", line));
  }
  const size_t columns = 6 + KpiNames().size();
  std::vector<SweepRow> rows;
  size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    trim_cr(line);
    if (line.empty()) continue;
    const std::vector<std::string_view> f = SplitFields(line, ',');
    if (f.size() != columns) {
      return absl::InvalidArgumentError(absl::StrCat(
          "line ", line_no, ": expected ", columns, " fields, got ", f.size()));
    }
    std::vector<double> v(columns, 0.0);
    for (size_t i = 0; i < columns; ++i) {
      if (i == 5) continue;
      absl::StatusOr<double> d = ParseDouble(f[i]);
      if (!d.ok() || !std::isfinite(*d)) {
        return absl::InvalidArgumentError(
            absl::StrCat("line ", line_no, ": bad number in column ", i + 1));
      }
      v[i] = *d;
    }
    SweepRow row;
    const std::string_view seed = f[5];
    auto [ptr, ec] =
        std::from_chars(seed.data(), seed.data() + seed.size(), row.seed);
    if (ec != std::errc() || ptr != seed.data() + seed.size()) {
      return absl::InvalidArgumentError(
          absl::StrCat("line ", line_no, ": bad seed"));
    }
    row.tool_radius = v[0];
    row.delay_ms = v[1];
    row.jitter_ms = v[2];
    row.loss = v[3];
    row.emd = v[4];
    for (size_t k = 0; k < KpiNames().size(); ++k) {
      (void)SetKpiValue(row.kpis, KpiNames()[k], v[6 + k]);
    }
    if (absl::Status s = ValidateKpis(row.kpis); !s.ok()) {
      return absl::InvalidArgumentError(absl::StrCat(
          "line ", line_no, ": ", std::string(s.message())));
    }
    rows.push_back(row);
  }
  return rows;
}

absl::StatusOr<RunResult> RunOnce(const ExperimentConfig& c,
                                  const fs::path& dir) {
  absl::StatusOr<RunResult> result = Simulate(c);
  if (!result.ok()) return result.status();
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    return absl::UnavailableError(
        absl::StrCat("cannot create ", dir.string(), ": ", ec.message()));
  }
  const RunResult& r = *result;
  const SweepRow row = RowFor(c, r);
  const json emos{{"emos_robot", r.emos_robot},
                  {"emos_customer", r.emos_customer},
                  {"target_emos", c.robot_utility.target_emos}};
  const json summary{{"run_key", RunKey(c)},
                     {"complete", r.follow.complete},
                     {"commands_sent", r.follow.commands_sent},
                     {"commands_dropped", r.follow.commands_dropped},
                     {"emos_robot", r.emos_robot},
                     {"emos_customer", r.emos_customer},
                     {"row", RowToJson(row)}};
  const std::vector<std::pair<std::string, std::function<void(std::ostream&)>>>
      files = {
          {"config.json", [&](std::ostream& os) {
             os << ToJson(c).dump(2) << '\n';
           }},
          {"plan.csv", [&](std::ostream& os) { WritePlanCsv(r.plan, os); }},
          {"trajectory.csv",
           [&](std::ostream& os) { WriteTrajectoryCsv(r.follow.log, os); }},
          {"trajectory_timed.csv",
           [&](std::ostream& os) { WriteTrajectoryCsv(r.follow.timed, os); }},
          {"heatmap.txt",
           [&](std::ostream& os) { WriteGridText(r.heatmap.grid, os); }},
          {"heatmap.pgm",
           [&](std::ostream& os) { WriteGridPgm16(r.heatmap.grid, os); }},
          {"deviation.txt",
           [&](std::ostream& os) { WriteGridText(r.deviation.grid, os); }},
          {"deviation.pgm",
           [&](std::ostream& os) { WriteGridPgm16(r.deviation.grid, os); }},
          {"kpis.json",
           [&](std::ostream& os) { os << ToJson(r.kpis).dump(2) << '\n'; }},
          {"quality.csv",
           [&](std::ostream& os) {
             os << QualityTableHeader() << '\n'
                << QualityTableRow(r.quality) << '\n';
           }},
          {"emos.json", [&](std::ostream& os) { os << emos.dump(2) << '\n'; }},
          {"result.csv",
           [&](std::ostream& os) { WriteSweepTable({row}, os); }},
          // Last, so its presence marks a finished run directory.
          {"summary.json",
           [&](std::ostream& os) { os << summary.dump(2) << '\n'; }},
      };
  for (const auto& [name, body] : files) {
    if (absl::Status s = WriteFile(dir / name, body); !s.ok()) return s;
  }
  return result;
}

absl::StatusOr<std::vector<SweepRow>> Sweep(const ExperimentConfig& config,
                                            int workers) {
  const fs::path out = config.output_dir;
  std::error_code ec;
  fs::create_directories(out / "runs", ec);
  if (ec) {
    return absl::UnavailableError(
        absl::StrCat("cannot create ", out.string(), ": ", ec.message()));
  }
  fs::remove(out / "sweep.partial.csv", ec);
  absl::StatusOr<std::vector<SweepRow>> rows =
      RunSweep(config, workers, out / "runs");
  if (!rows.ok()) {
    // Whatever finished is on disk under runs/; list it for inspection.
    std::vector<SweepRow> done;
    for (const ExperimentConfig& p : SweepPoints(config)) {
      absl::StatusOr<std::string> text =
          ReadFile(out / "runs" / RunKey(p) / "summary.json");
      if (!text.ok()) continue;
      absl::StatusOr<json> j = ParseJson(*text);
      if (!j.ok() || !j->contains("row")) continue;
      absl::StatusOr<SweepRow> row = RowFromJson((*j)["row"]);
      if (row.ok()) done.push_back(*row);
    }
    (void)WriteFile(out / "sweep.partial.csv",
                    [&](std::ostream& os) { WriteSweepTable(done, os); });
    return rows.status();
  }
  if (absl::Status s = WriteFile(out / "sweep.csv",
                                 [&](std::ostream& os) {
                                   WriteSweepTable(*rows, os);
                                 });
      !s.ok()) {
    return s;
  }
  return rows;
}

absl::StatusOr<std::vector<SweepRow>> SweepInMemory(
    const ExperimentConfig& config, int workers) {
  return RunSweep(config, workers, std::nullopt);
}

absl::StatusOr<CalibrationTable> CalibrationFromSweep(
    const std::vector<SweepRow>& rows, double tool_radius) {
  std::map<double, std::vector<const SweepRow*>> by_delay;
  for (const SweepRow& row : rows) {
    if (std::abs(row.tool_radius - tool_radius) <= kRadiusMatch) {
      by_delay[row.delay_ms].push_back(&row);
    }
  }
  std::vector<CalibrationRow> table;
  for (const auto& [delay, group] : by_delay) {
    CalibrationRow out;
    out.delay_ms = delay;
    out.kpis.phase = group.front()->kpis.phase;
    for (const std::string& name : KpiNames()) {
      double sum = 0.0;
      for (const SweepRow* r : group) sum += *KpiValue(r->kpis, name);
      (void)SetKpiValue(out.kpis, name, sum / static_cast<double>(group.size()));
    }
    // Averaging can nudge the ordered statistics apart by an ulp.
    out.kpis.vel_mean =
        std::clamp(out.kpis.vel_mean, out.kpis.vel_min, out.kpis.vel_max);
    out.kpis.traj_err_mean =
        std::min(out.kpis.traj_err_mean, out.kpis.traj_err_max);
    out.kpis.z_dev_mean = std::min(out.kpis.z_dev_mean, out.kpis.z_dev_max);
    table.push_back(out);
  }
  if (table.size() < 2) {
    return absl::InvalidArgumentError(absl::StrCat(
        "sweep has fewer than two delays at tool radius ", tool_radius));
  }
  return CalibrationTable::Create(std::move(table));
}

absl::StatusOr<CalibrationTable> BuildCalibration(
    const ExperimentConfig& config, int workers) {
  ExperimentConfig c = config;
  c.sweep.tool_radii_mm = {config.tool_radius_mm};
  c.sweep.seeds = {config.sweep.seeds.front()};
  absl::StatusOr<std::vector<SweepRow>> rows = SweepInMemory(c, workers);
  if (!rows.ok()) return rows.status();
  return CalibrationFromSweep(*rows, config.tool_radius_mm);
}

std::shared_ptr<NrmService> ServiceFor(const ExperimentConfig& config,
                                       std::optional<CalibrationTable> table) {
  auto service = std::make_shared<NrmService>();
  service->caps = config.caps;
  service->defaults = config.nrm_defaults;
  service->table = std::move(table);
  return service;
}

absl::StatusOr<DemoResult> DemoLoop(const ExperimentConfig& config,
                                    FeedbackMode mode, NrmClient& client) {
  if (absl::Status s = ValidateConfig(config); !s.ok()) return s;
  if (mode == FeedbackMode::kDirect) {
    return absl::InvalidArgumentError("demo-loop runs simple or detailed mode");
  }
  DemoResult out;
  auto exchange = [&](const Message& msg) -> absl::StatusOr<Message> {
    const std::string line = EncodeMessage(msg);
    out.transcript.push_back("> " + line);
    absl::StatusOr<std::string> reply = client.CallRaw(line);
    if (!reply.ok()) return reply.status();
    out.transcript.push_back("< " + *reply);
    absl::StatusOr<Message> parsed = ParseMessage(*reply);
    if (!parsed.ok()) return parsed.status();
    if (const auto* e = std::get_if<ErrorReply>(&*parsed)) {
      return absl::InternalError(
          absl::StrCat("server error ", e->code, ": ", e->reason));
    }
    return parsed;
  };

  QoSManagementRequest request;
  request.mode = mode;
  request.val_ues = config.demo.val_ues;
  request.ip_address = config.demo.ip_address;
  request.requirements = config.nrm_defaults;
  request.requirements.latency_ms = config.demo.initial_latency_ms;
  request.requirements.jitter_ms = 0.0;
  absl::StatusOr<Message> reply = exchange(request);
  if (!reply.ok()) return reply.status();
  const double target = config.robot_utility.target_emos;
  while (true) {
    const auto* grant = std::get_if<QoSGrant>(&*reply);
    if (grant == nullptr) {
      out.transcript.push_back("# stopped: no grant");
      return out;
    }
    ExperimentConfig run = config;
    run.network = ConditionsFor(grant->requirements, config.network.seed);
    absl::StatusOr<RunResult> result = Simulate(run);
    if (!result.ok()) return result.status();
    out.final_latency_ms = grant->requirements.latency_ms;
    out.final_emos = result->emos_robot;
    out.transcript.push_back(absl::StrCat(
        "# round ", out.rounds, " latency_ms=",
        FormatDouble(out.final_latency_ms),
        " emos_robot=", FormatDouble(out.final_emos)));
    if (result->emos_robot >= target) {
      out.converged = true;
      out.transcript.push_back(
          absl::StrCat("# converged after ", out.rounds, " rounds"));
      return out;
    }
    if (out.rounds >= config.demo.max_rounds) {
      out.transcript.push_back("# round limit reached without convergence");
      return out;
    }
    ++out.rounds;
    Message feedback =
        mode == FeedbackMode::kSimple
            ? Message(SimpleFeedback{result->emos_robot, target})
            : Message(DetailedFeedback{result->kpis, config.robot_utility});
    reply = exchange(feedback);
    if (!reply.ok()) return reply.status();
  }
}

}  // namespace sandqos
