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

// Acceptance checks. Prints one PASS or FAIL line per criterion and exits
// non-zero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "sandqos/experiment.h"
#include "sandqos/nrm.h"
#include "sandqos/protocol.h"
#include "sandqos/quality.h"
#include "sandqos/rng.h"
#include "sandqos/stats.h"
#include "sandqos/utility.h"
#include "support/fuzz.h"
#include "support/instances.h"
#include "support/tables.h"
#include "support/test_util.h"

namespace sandqos {
namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

double Seconds(Clock::time_point since) {
  return std::chrono::duration<double>(Clock::now() - since).count();
}

class Report {
 public:
  void Add(int criterion, bool pass, const std::string& detail) {
    std::printf("%s criterion %d: %s\n", pass ? "PASS" : "FAIL", criterion,
                detail.c_str());
    std::fflush(stdout);
    failed_ |= !pass;
  }
  bool failed() const { return failed_; }

 private:
  bool failed_ = false;
};

double Spearman(const std::vector<double>& x, const std::vector<double>& y) {
  absl::StatusOr<double> r = SpearmanCorrelation(x, y);
  return r.ok() ? *r : std::nan("");
}

double RobotScore(const RobotKpis& k, const UtilitySpec& spec) {
  absl::StatusOr<Emos> e = EmosRobot(k, spec);
  return e.ok() ? e->value() : std::nan("");
}

// Largest sweep delay up to which every row meets the utility target.
std::optional<double> EmpiricalKnee(const std::vector<SweepRow>& rows,
                                    const UtilitySpec& spec) {
  std::vector<SweepRow> sorted = rows;
  std::sort(sorted.begin(), sorted.end(),
            [](const SweepRow& a, const SweepRow& b) {
              return a.delay_ms < b.delay_ms;
            });
  std::optional<double> knee;
  for (const SweepRow& row : sorted) {
    if (RobotScore(row.kpis, spec) < spec.target_emos) break;
    knee = row.delay_ms;
  }
  return knee;
}

std::string KneeText(const std::optional<double>& k) {
  return k.has_value() ? absl::StrCat(*k) : "none";
}

std::optional<double> TranslatedKnee(const std::vector<SweepRow>& rows,
                                     double radius, const UtilitySpec& spec) {
  absl::StatusOr<CalibrationTable> t = CalibrationFromSweep(rows, radius);
  if (!t.ok()) return std::nullopt;
  absl::StatusOr<QoSRequirements> q = TranslateGnw(spec, *t, {});
  if (!q.ok()) return std::nullopt;
  return q->latency_ms;
}

void CheckOracle(Report& report) {
  Rng rng(20260101);
  double worst = 0.0;
  int mismatches = 0;
  const auto start = Clock::now();
  for (int i = 0; i < 100; ++i) {
    const testing::GridInstance g = testing::RandomGridInstance(rng, 5);
    absl::StatusOr<double> emd = EmdExact(g.instance);
    const double oracle = testing::OracleEmd(g);
    const double diff = emd.ok() ? std::abs(*emd - oracle) : INFINITY;
    worst = std::max(worst, diff);
    if (!(diff <= 1e-9)) ++mismatches;
  }
  const double secs = Seconds(start);
  report.Add(1, mismatches == 0 && secs < 10.0,
             absl::StrFormat("EMD vs LP oracle on 100 instances (<=5x5): "
                             "max |diff| %.3g, %d over 1e-9, %.3f s",
                             worst, mismatches, secs));
}

void CheckZeroDelay(Report& report, const std::vector<SweepRow>& rows) {
  ExperimentConfig c;
  c.network.delay_ms = 0.0;
  const auto start = Clock::now();
  absl::StatusOr<RunResult> zero = Simulate(c);
  const double secs_zero = Seconds(start);
  c.network.delay_ms = 66.0;
  const auto start66 = Clock::now();
  absl::StatusOr<RunResult> delayed = Simulate(c);
  const double secs_66 = Seconds(start66);
  if (!zero.ok() || !delayed.ok()) {
    report.Add(2, false, "simulation failed");
    return;
  }
  double min_delayed = INFINITY;
  for (const SweepRow& row : rows) {
    if (row.delay_ms > 0.0) min_delayed = std::min(min_delayed, row.emd);
  }
  const bool pass = zero->kpis.traj_err_max < 0.1 &&
                    zero->quality.emd < min_delayed && secs_zero < 1.0 &&
                    secs_66 < 1.0;
  report.Add(2, pass,
             absl::StrFormat("zero delay: traj_err_max %.4f mm, EMD %.6g vs "
                             "min delayed EMD %.6g; run time %.3f s (0 ms), "
                             "%.3f s (66 ms)",
                             zero->kpis.traj_err_max, zero->quality.emd,
                             min_delayed, secs_zero, secs_66));
}

void CheckDelaySweep(Report& report, const std::vector<SweepRow>& rows) {
  std::vector<double> delay;
  std::vector<double> emd;
  std::map<double, double> by_delay;
  for (const SweepRow& row : rows) {
    delay.push_back(row.delay_ms);
    emd.push_back(row.emd);
    by_delay[row.delay_ms] = row.emd;
  }
  const double rho = Spearman(delay, emd);
  const double ratio = by_delay[66.0] / by_delay[10.0];
  const UtilitySpec spec = DefaultSandingSpec();
  const std::optional<double> empirical = EmpiricalKnee(rows, spec);
  const std::optional<double> translated = TranslatedKnee(rows, 12.5, spec);
  const bool pass = rho >= 0.8 && ratio > 2.0 &&
                    empirical.has_value() && empirical == translated;
  report.Add(3, pass,
             absl::StrFormat("r=12.5 mm: Spearman(delay, EMD) %.3f, "
                             "EMD(66)/EMD(10) %.3f, knee sweep %s ms vs "
                             "translate %s ms",
                             rho, ratio, KneeText(empirical),
                             KneeText(translated)));
}

void CheckKpiCorrelation(Report& report, const std::vector<SweepRow>& rows) {
  std::vector<double> emd;
  std::map<std::string, std::vector<double>> kpi;
  for (const SweepRow& row : rows) {
    emd.push_back(row.emd);
    kpi["traj_err_max"].push_back(row.kpis.traj_err_max);
    kpi["vel_max"].push_back(row.kpis.vel_max);
    kpi["vel_mean"].push_back(row.kpis.vel_mean);
    kpi["orient_err_rms"].push_back(row.kpis.orient_err_rms);
  }
  const double traj = Spearman(emd, kpi["traj_err_max"]);
  const double vmax = Spearman(emd, kpi["vel_max"]);
  const double vmean = Spearman(emd, kpi["vel_mean"]);
  const double orient = Spearman(emd, kpi["orient_err_rms"]);
  const bool pass = traj >= 0.7 && vmax >= 0.7 && vmean >= 0.7 &&
                    std::abs(orient) < 0.4;
  report.Add(4, pass,
             absl::StrFormat("Spearman with EMD: traj_err_max %.3f, vel_max "
                             "%.3f, vel_mean %.3f, orient_err_rms %.3f",
                             traj, vmax, vmean, orient));
}

void CheckUtility(Report& report) {
  const UtilitySpec spec = AnchoredSandingSpec();
  auto kpis = [](double traj, double vel) {
    RobotKpis k;
    k.traj_err_max = traj;
    k.vel_max = vel;
    return k;
  };
  const double good = RobotScore(kpis(3.0, 150.0), spec);
  const double bad = RobotScore(kpis(9.0, 450.0), spec);
  const double mid = RobotScore(kpis(3.0, 300.0), spec);
  report.Add(5, good == 5.0 && bad == 1.0 && mid == 4.0,
             absl::StrFormat("emos_robot at good anchors %.17g, at bad "
                             "anchors %.17g, one good one midway %.17g",
                             good, bad, mid));
}

void CheckTranslate(Report& report, const std::vector<SweepRow>& rows25) {
  const UtilitySpec spec = AnchoredSandingSpec();
  absl::StatusOr<QoSRequirements> synthetic =
      TranslateGnw(spec, testing::CrossingTable(), {});
  const double synthetic_ms = synthetic.ok() ? synthetic->latency_ms : -1.0;
  const std::optional<double> empirical = EmpiricalKnee(rows25, spec);
  const std::optional<double> translated = TranslatedKnee(rows25, 25.0, spec);
  report.Add(6,
             synthetic_ms == 40.0 && empirical.has_value() &&
                 empirical == translated,
             absl::StrFormat("crossing between 40 and 50 ms -> %g ms; "
                             "r=25 mm anchored spec: translate %s ms vs "
                             "empirical knee %s ms",
                             synthetic_ms, KneeText(translated),
                             KneeText(empirical)));
}

void CheckDemo(Report& report) {
  const auto start = Clock::now();
  ExperimentConfig c;
  c.tool_radius_mm = 25.0;
  c.demo.initial_latency_ms = 100.0;
  c.demo.max_rounds = 5;
  absl::StatusOr<CalibrationTable> table = BuildCalibration(c, 0);
  if (!table.ok()) {
    report.Add(7, false, absl::StrCat("calibration failed: ",
                                      table.status().ToString()));
    return;
  }
  auto run = [&](FeedbackMode mode) -> absl::StatusOr<DemoResult> {
    absl::StatusOr<std::unique_ptr<NrmServer>> server =
        NrmServer::Start(ServiceFor(c, *table), "127.0.0.1", 0);
    if (!server.ok()) return server.status();
    absl::StatusOr<NrmClient> client =
        NrmClient::Connect("127.0.0.1", (*server)->port());
    if (!client.ok()) return client.status();
    return DemoLoop(c, mode, *client);
  };
  absl::StatusOr<DemoResult> detailed = run(FeedbackMode::kDetailed);
  absl::StatusOr<DemoResult> simple = run(FeedbackMode::kSimple);
  const double secs = Seconds(start);
  if (!detailed.ok() || !simple.ok()) {
    report.Add(7, false, "demo loop failed");
    return;
  }
  const bool pass = detailed->converged && detailed->rounds <= 1 &&
                    simple->converged && simple->rounds <= 5 && secs < 30.0;
  report.Add(7, pass,
             absl::StrFormat("r=25 mm from 100 ms: detailed %s in %d "
                             "round(s) at %g ms, simple %s in %d round(s) at "
                             "%g ms, %.2f s",
                             detailed->converged ? "converged" : "no",
                             detailed->rounds, detailed->final_latency_ms,
                             simple->converged ? "converged" : "no",
                             simple->rounds, simple->final_latency_ms, secs));
}

void CheckDeterminism(Report& report, const fs::path& work) {
  ExperimentConfig c;
  c.network.delay_ms = 40.0;
  c.network.jitter_ms = 5.0;
  c.network.loss_rate = 0.02;
  c.network.seed = 11;
  const fs::path a = work / "determinism" / "a";
  const fs::path b = work / "determinism" / "b";
  std::error_code ec;
  fs::remove_all(work / "determinism", ec);
  if (!RunOnce(c, a).ok() || !RunOnce(c, b).ok()) {
    report.Add(8, false, "run failed");
    return;
  }
  int files = 0;
  std::vector<std::string> differing;
  for (const auto& entry : fs::directory_iterator(a)) {
    ++files;
    const std::string name = entry.path().filename().string();
    if (!fs::exists(b / name) ||
        testing::ReadFile(a / name) != testing::ReadFile(b / name)) {
      differing.push_back(name);
    }
  }
  for (const auto& entry : fs::directory_iterator(b)) {
    if (!fs::exists(a / entry.path().filename())) {
      differing.push_back(entry.path().filename().string());
    }
  }
  report.Add(8, files > 0 && differing.empty(),
             absl::StrFormat("two runs with loss and jitter: %d files, %d "
                             "differ",
                             files, static_cast<int>(differing.size())));
}

void CheckMalformed(Report& report) {
  auto service = std::make_shared<NrmService>();
  service->table = testing::CrossingTable();
  NrmSession session(service, 1);
  const std::vector<std::string> valid = testing::ValidClientLines();
  session.HandleLine(valid[0]);
  session.HandleLine(valid[1]);
  const SessionState before = session.state();
  int errors = 0;
  int changed = 0;
  for (const std::string& line : testing::MalformedLines(9, 1000)) {
    absl::StatusOr<Message> reply = ParseMessage(session.HandleLine(line));
    if (reply.ok() && std::holds_alternative<ErrorReply>(*reply)) ++errors;
    if (!(session.state() == before)) ++changed;
  }

  int tcp_errors = 0;
  bool tcp_ok = false;
  if (absl::StatusOr<std::unique_ptr<NrmServer>> server =
          NrmServer::Start(service, "127.0.0.1", 0);
      server.ok()) {
    absl::StatusOr<NrmClient> client =
        NrmClient::Connect("127.0.0.1", (*server)->port());
    if (client.ok() && client->CallRaw(valid[0]).ok()) {
      for (const std::string& line : testing::MalformedLines(10, 1000)) {
        absl::StatusOr<std::string> raw = client->CallRaw(line);
        if (!raw.ok()) break;
        absl::StatusOr<Message> reply = ParseMessage(*raw);
        if (reply.ok() && std::holds_alternative<ErrorReply>(*reply)) {
          ++tcp_errors;
        }
      }
      // Still the untouched round-0 session.
      absl::StatusOr<Message> g = client->Call(SimpleFeedback{4.2, 4.0});
      const auto* grant = g.ok() ? std::get_if<QoSGrant>(&*g) : nullptr;
      tcp_ok = grant != nullptr && grant->round == 1;
    }
  }
  report.Add(9, errors == 1000 && changed == 0 && tcp_errors == 1000 && tcp_ok,
             absl::StrFormat("1000 malformed lines: %d error replies, %d "
                             "state changes; over TCP %d error replies, "
                             "session %s",
                             errors, changed, tcp_errors,
                             tcp_ok ? "intact" : "damaged"));
}

std::vector<SweepRow> DelaySweep(double radius,
                                 const std::vector<double>& delays) {
  ExperimentConfig c;
  c.tool_radius_mm = radius;
  c.sweep.tool_radii_mm = {radius};
  c.sweep.delays_ms = delays;
  c.sweep.seeds = {c.network.seed};
  absl::StatusOr<std::vector<SweepRow>> rows = SweepInMemory(c, 0);
  if (!rows.ok()) {
    std::fprintf(stderr, "sweep at r=%g failed: %s\n", radius,
                 rows.status().ToString().c_str());
    return {};
  }
  return *rows;
}

int Main(int argc, char** argv) {
  fs::path work = fs::temp_directory_path() / "sandqos-acceptance";
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--workdir") == 0 && i + 1 < argc) {
      work = argv[++i];
    } else {
      std::fprintf(stderr, "usage: %s [--workdir DIR]\n", argv[0]);
      return 2;
    }
  }
  std::error_code ec;
  fs::create_directories(work, ec);

  Report report;
  CheckOracle(report);
  const std::vector<SweepRow> rows12 =
      DelaySweep(12.5, {0, 10, 20, 30, 40, 50, 60, 66, 70, 80, 90, 100});
  CheckZeroDelay(report, rows12);
  CheckDelaySweep(report, rows12);
  CheckKpiCorrelation(report, rows12);
  CheckUtility(report);
  const std::vector<SweepRow> rows25 =
      DelaySweep(25.0, {0, 10, 20, 30, 40, 50, 60, 70, 80, 90, 100});
  CheckTranslate(report, rows25);
  CheckDemo(report);
  CheckDeterminism(report, work);
  CheckMalformed(report);
  return report.failed() ? 1 : 0;
}

}  // namespace
}  // namespace sandqos

int main(int argc, char** argv) { return sandqos::Main(argc, argv); }
