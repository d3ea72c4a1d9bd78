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

// sandqos: plan, run, sweep, emd, serve-nrm, demo-loop.

#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "absl/status/status.h"
#include "absl/strings/str_cat.h"
#include "sandqos/experiment.h"
#include "sandqos/nrm.h"
#include "sandqos/quality.h"
#include "sandqos/surface.h"
#include "sandqos/text_format.h"

namespace sandqos {
namespace {

struct Overrides {
  std::optional<double> delay_ms;
  std::optional<double> jitter_ms;
  std::optional<double> loss_rate;
  std::optional<double> bandwidth_kbps;
  std::optional<uint64_t> seed;
  std::optional<double> tool_radius_mm;
  std::optional<std::string> output_dir;
  bool symmetric_delay = false;
};

void AddOverrides(CLI::App* app, Overrides& o) {
  app->add_option("--delay-ms", o.delay_ms, "Mean one-way delay");
  app->add_option("--jitter-ms", o.jitter_ms, "Jitter half-width");
  app->add_option("--loss-rate", o.loss_rate, "Packet loss probability");
  app->add_option("--bandwidth-kbps", o.bandwidth_kbps, "Link bandwidth");
  app->add_option("--seed", o.seed, "Network and plant seed");
  app->add_option("--tool-radius-mm", o.tool_radius_mm, "Tool radius");
  app->add_option("--output-dir", o.output_dir, "Output directory");
  app->add_flag("--symmetric-delay", o.symmetric_delay,
                "Delay pose reports as well as commands");
}

absl::StatusOr<ExperimentConfig> Resolve(const std::string& path,
                                         const Overrides& o) {
  absl::StatusOr<ExperimentConfig> c = LoadConfig(path);
  if (!c.ok()) return c.status();
  if (o.delay_ms) c->network.delay_ms = *o.delay_ms;
  if (o.jitter_ms) c->network.jitter_ms = *o.jitter_ms;
  if (o.loss_rate) c->network.loss_rate = *o.loss_rate;
  if (o.bandwidth_kbps) c->network.bandwidth_kbps = *o.bandwidth_kbps;
  if (o.seed) c->network.seed = *o.seed;
  if (o.tool_radius_mm) c->tool_radius_mm = *o.tool_radius_mm;
  if (o.output_dir) c->output_dir = *o.output_dir;
  if (o.symmetric_delay) c->symmetric_delay = true;
  if (absl::Status s = ValidateConfig(*c); !s.ok()) return s;
  return c;
}

int Fail(const absl::Status& s) {
  std::cerr << "sandqos: " << s.message() << '\n';
  return 1;
}

int CmdPlan(const ExperimentConfig& c, const std::string& out) {
  absl::StatusOr<PlannedTrajectory> plan = PlanFor(c);
  if (!plan.ok()) return Fail(plan.status());
  if (out.empty()) {
    WritePlanCsv(*plan, std::cout);
    return 0;
  }
  std::ofstream os(out, std::ios::binary);
  WritePlanCsv(*plan, os);
  if (!os) return Fail(absl::UnavailableError("cannot write " + out));
  return 0;
}

int CmdRun(const ExperimentConfig& c) {
  const std::filesystem::path dir =
      std::filesystem::path(c.output_dir) / "runs" / RunKey(c);
  absl::StatusOr<RunResult> r = RunOnce(c, dir);
  if (!r.ok()) return Fail(r.status());
  std::cout << "run_dir " << dir.string() << '\n'
            << QualityTableHeader() << '\n'
            << QualityTableRow(r->quality) << '\n'
            << "traj_err_max " << FormatDouble(r->kpis.traj_err_max) << '\n'
            << "emos_robot " << FormatDouble(r->emos_robot) << '\n'
            << "emos_customer " << FormatDouble(r->emos_customer) << '\n';
  if (!r->follow.complete) {
    std::cerr << "sandqos: warning: duration limit reached before the plan "
                 "finished\n";
  }
  return 0;
}

int CmdSweep(ExperimentConfig c, int workers,
             const std::vector<double>& delays,
             const std::vector<double>& radii,
             const std::vector<uint64_t>& seeds) {
  if (!delays.empty()) c.sweep.delays_ms = delays;
  if (!radii.empty()) c.sweep.tool_radii_mm = radii;
  if (!seeds.empty()) c.sweep.seeds = seeds;
  if (absl::Status s = ValidateConfig(c); !s.ok()) return Fail(s);
  absl::StatusOr<std::vector<SweepRow>> rows = Sweep(c, workers);
  if (!rows.ok()) {
    std::cerr << "sandqos: partial results in "
              << (std::filesystem::path(c.output_dir) / "sweep.partial.csv")
                     .string()
              << '\n';
    return Fail(rows.status());
  }
  WriteSweepTable(*rows, std::cout);
  return 0;
}

int CmdEmd(const std::string& path, double cell_size, bool heatmap,
           std::optional<int> window, std::optional<int> downsample) {
  std::ifstream is(path, std::ios::binary);
  if (!is) return Fail(absl::NotFoundError("cannot open " + path));
  absl::StatusOr<Grid> grid = ReadGridText(is, cell_size);
  if (!grid.ok()) return Fail(grid.status());
  DeviationMap dev{*grid, 0, 0.0};
  if (heatmap) {
    Heatmap map{*grid};
    const int w = window.value_or(std::max(grid->width(), grid->height()) |
                                  1);
    absl::StatusOr<DeviationMap> d = ComputeDeviationMap(map, w);
    if (!d.ok()) return Fail(d.status());
    dev = *std::move(d);
  } else {
    double removed = 0.0;
    for (double v : grid->values()) removed += std::abs(v);
    dev.source_mass = removed;
  }
  absl::StatusOr<ProductQuality> q =
      ScoreProduct(dev, downsample.value_or(DefaultDownsample(grid->spec())));
  if (!q.ok()) return Fail(q.status());
  std::cout << "emd " << FormatDouble(q->emd) << '\n'
            << "work " << FormatDouble(q->work) << '\n'
            << "downsample " << q->downsample << '\n';
  return 0;
}

absl::StatusOr<std::optional<CalibrationTable>> LoadTable(
    const std::string& path, double tool_radius) {
  if (path.empty()) return std::optional<CalibrationTable>();
  std::ifstream is(path, std::ios::binary);
  if (!is) return absl::NotFoundError("cannot open " + path);
  absl::StatusOr<std::vector<SweepRow>> rows = ReadSweepTable(is);
  if (!rows.ok()) return rows.status();
  absl::StatusOr<CalibrationTable> t = CalibrationFromSweep(*rows, tool_radius);
  if (!t.ok()) return t.status();
  return std::optional<CalibrationTable>(*std::move(t));
}

int CmdServe(const ExperimentConfig& c, const std::string& listen,
             const std::string& table_path) {
  std::string host;
  int port = 0;
  if (absl::Status s = ParseHostPort(listen, host, port); !s.ok()) {
    return Fail(s);
  }
  absl::StatusOr<std::optional<CalibrationTable>> table =
      LoadTable(table_path, c.tool_radius_mm);
  if (!table.ok()) return Fail(table.status());
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);
  absl::StatusOr<std::unique_ptr<NrmServer>> server =
      NrmServer::Start(ServiceFor(c, *std::move(table)), host, port);
  if (!server.ok()) return Fail(server.status());
  std::cout << "listening on " << host << ":" << (*server)->port()
            << std::endl;
  int sig = 0;
  sigwait(&signals, &sig);
  (*server)->Stop();
  return 0;
}

int CmdDemo(const ExperimentConfig& c, const std::string& mode_name,
            const std::string& server_addr, const std::string& table_path,
            const std::string& transcript_path, int workers) {
  absl::StatusOr<FeedbackMode> mode = ParseFeedbackMode(mode_name);
  if (!mode.ok() || *mode == FeedbackMode::kDirect) {
    return Fail(absl::InvalidArgumentError("--mode must be simple or detailed"));
  }
  std::unique_ptr<NrmServer> local;
  std::string host;
  int port = 0;
  if (server_addr.empty()) {
    absl::StatusOr<std::optional<CalibrationTable>> table =
        LoadTable(table_path, c.tool_radius_mm);
    if (!table.ok()) return Fail(table.status());
    if (!table->has_value() && *mode == FeedbackMode::kDetailed) {
      absl::StatusOr<CalibrationTable> built = BuildCalibration(c, workers);
      if (!built.ok()) return Fail(built.status());
      *table = *std::move(built);
    }
    absl::StatusOr<std::unique_ptr<NrmServer>> server =
        NrmServer::Start(ServiceFor(c, *std::move(table)), "127.0.0.1", 0);
    if (!server.ok()) return Fail(server.status());
    local = *std::move(server);
    host = "127.0.0.1";
    port = local->port();
  } else if (absl::Status s = ParseHostPort(server_addr, host, port);
             !s.ok()) {
    return Fail(s);
  }
  absl::StatusOr<NrmClient> client = NrmClient::Connect(host, port);
  if (!client.ok()) return Fail(client.status());
  absl::StatusOr<DemoResult> result = DemoLoop(c, *mode, *client);
  if (!result.ok()) return Fail(result.status());
  const std::string path =
      transcript_path.empty()
          ? (std::filesystem::path(c.output_dir) /
             ("demo-" + mode_name + ".txt"))
                .string()
          : transcript_path;
  std::filesystem::create_directories(
      std::filesystem::path(path).parent_path().empty()
          ? std::filesystem::path(".")
          : std::filesystem::path(path).parent_path());
  std::ofstream os(path, std::ios::binary);
  for (const std::string& line : result->transcript) {
    std::cout << line << '\n';
    os << line << '\n';
  }
  if (!os) return Fail(absl::UnavailableError("cannot write " + path));
  if (local) local->Stop();
  return result->converged ? 0 : 2;
}

}  // namespace
}  // namespace sandqos

int main(int argc, char** argv) {
  using namespace sandqos;
  CLI::App app{"Network QoS to sanding quality simulator and NRM tools"};
  app.require_subcommand(1);
  std::string config_path;
  app.add_option("-c,--config", config_path,
                 std::string("Configuration file (default: $") +
                     kConfigEnvVar + ")");

  Overrides overrides;
  std::string plan_out;
  CLI::App* plan = app.add_subcommand("plan", "Write the raster plan as CSV");
  AddOverrides(plan, overrides);
  plan->add_option("-o,--output", plan_out, "Output file (default stdout)");

  CLI::App* run = app.add_subcommand("run", "Simulate one configuration");
  AddOverrides(run, overrides);

  int workers = 0;
  std::vector<double> delays;
  std::vector<double> radii;
  std::vector<uint64_t> seeds;
  CLI::App* sweep = app.add_subcommand("sweep", "Delay x tool x seed sweep");
  AddOverrides(sweep, overrides);
  sweep->add_option("--workers", workers, "Parallel runs (0 = all cores)");
  sweep->add_option("--delays-ms", delays, "Delay grid");
  sweep->add_option("--tool-radii-mm", radii, "Tool radii");
  sweep->add_option("--seeds", seeds, "Seeds");

  std::string map_path;
  double cell_size = 1.0;
  bool heatmap = false;
  std::optional<int> window;
  std::optional<int> downsample;
  CLI::App* emd = app.add_subcommand("emd", "EMD of a grid text file");
  emd->add_option("mapfile", map_path, "Grid text file")->required();
  emd->add_option("--cell-size-mm", cell_size, "Cell size");
  emd->add_flag("--heatmap", heatmap,
                "Input is a heatmap; derive the deviation map first");
  emd->add_option("--window", window, "Deviation window (odd, cells)");
  emd->add_option("--downsample", downsample, "Block factor");

  std::string listen = "127.0.0.1:7878";
  std::string table_path;
  CLI::App* serve = app.add_subcommand("serve-nrm", "Run the NRM server");
  AddOverrides(serve, overrides);
  serve->add_option("--listen", listen, "host:port");
  serve->add_option("--table", table_path, "Sweep table for detailed mode");

  std::string mode = "detailed";
  std::string server_addr;
  std::string transcript;
  CLI::App* demo = app.add_subcommand("demo-loop", "Closed feedback loop");
  AddOverrides(demo, overrides);
  demo->add_option("--mode", mode, "simple or detailed")
      ->check(CLI::IsMember({"simple", "detailed"}));
  demo->add_option("--server", server_addr,
                   "host:port of a running server (default: in-process)");
  demo->add_option("--table", table_path, "Sweep table for the server");
  demo->add_option("--transcript", transcript, "Transcript file");
  demo->add_option("--workers", workers, "Parallel calibration runs");

  CLI11_PARSE(app, argc, argv);

  if (emd->parsed()) {
    return CmdEmd(map_path, cell_size, heatmap, window, downsample);
  }
  absl::StatusOr<ExperimentConfig> config = Resolve(config_path, overrides);
  if (!config.ok()) return Fail(config.status());
  if (plan->parsed()) return CmdPlan(*config, plan_out);
  if (run->parsed()) return CmdRun(*config);
  if (sweep->parsed()) return CmdSweep(*config, workers, delays, radii, seeds);
  if (serve->parsed()) return CmdServe(*config, listen, table_path);
  return CmdDemo(*config, mode, server_addr, table_path, transcript, workers);
}
