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

// Network resource management: the operator-side session logic for direct,
// simple and detailed feedback, the translation from a robot utility spec
// to network requirements, and a line-oriented TCP server and client.

#ifndef SANDQOS_NRM_H_
#define SANDQOS_NRM_H_

#include <atomic>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "sandqos/kpi.h"
#include "sandqos/protocol.h"
#include "sandqos/utility.h"

namespace sandqos {

struct CalibrationRow {
  double delay_ms = 0.0;
  RobotKpis kpis;
};

// Predicted robot KPIs as a function of delay at one tool radius and
// controller configuration.
class CalibrationTable {
 public:
  // Needs at least two rows with strictly increasing delays.
  static absl::StatusOr<CalibrationTable> Create(
      std::vector<CalibrationRow> rows);

  const std::vector<CalibrationRow>& rows() const { return rows_; }

  // Linear interpolation per KPI, clamped to the end rows outside the
  // table range.
  RobotKpis PredictKpis(double delay_ms) const;

 private:
  explicit CalibrationTable(std::vector<CalibrationRow> rows)
      : rows_(std::move(rows)) {}
  std::vector<CalibrationRow> rows_;
};

// Largest table delay d such that the predicted eMOS meets the target at d
// and at every smaller table delay. Jitter budget 0, loss and bandwidth
// from `defaults`. FailedPrecondition when even the first row misses.
absl::StatusOr<QoSRequirements> TranslateGnw(const UtilitySpec& spec,
                                             const CalibrationTable& table,
                                             const QoSRequirements& defaults);

struct PolicyCaps {
  double min_latency_ms = 1.0;   // tightest budget the operator can honour
  double max_latency_ms = 100.0;  // loosest budget handed out
  double max_bandwidth_kbps = 10000.0;
};

absl::Status ValidateCaps(const PolicyCaps& caps);

struct FeedbackRecord {
  uint64_t round = 0;
  double emos = 0.0;
  std::optional<RobotKpis> kpis;

  friend bool operator==(const FeedbackRecord&,
                         const FeedbackRecord&) = default;
};

struct SessionState {
  uint64_t session_id = 0;
  bool active = false;
  FeedbackMode mode = FeedbackMode::kDirect;
  std::vector<std::string> val_ues;
  std::string ip_address;
  QoSRequirements granted;
  uint64_t round = 0;
  // Consecutive simple reports at or above target + 0.5.
  int good_streak = 0;
  std::vector<FeedbackRecord> history;

  friend bool operator==(const SessionState&, const SessionState&) = default;
};

inline constexpr double kAimdIncreaseMs = 5.0;
inline constexpr int kAimdPatience = 3;
inline constexpr double kAimdMargin = 0.5;
inline constexpr double kLatencyFloorMs = 1.0;

// eMOS below target halves the latency budget (floor 1 ms); kAimdPatience
// consecutive reports at or above target + kAimdMargin add kAimdIncreaseMs
// up to the cap.
SessionState AdaptSimple(const SessionState& state, double emos, double target,
                         const PolicyCaps& caps);

// Read-only configuration shared by all sessions.
struct NrmService {
  PolicyCaps caps;
  std::optional<CalibrationTable> table;
  QoSRequirements defaults;
};

// One connection's state machine. A reply is produced for every line; any
// line that does not lead to a grant or deny leaves the state untouched.
class NrmSession {
 public:
  NrmSession(std::shared_ptr<const NrmService> service, uint64_t session_id);

  Message Handle(std::string_view line);
  std::string HandleLine(std::string_view line);

  const SessionState& state() const { return state_; }

 private:
  absl::StatusOr<Message> Dispatch(const Message& msg);
  absl::StatusOr<Message> OnRequest(const QoSManagementRequest& req);
  absl::StatusOr<Message> OnSimple(const SimpleFeedback& fb);
  absl::StatusOr<Message> OnDetailed(const DetailedFeedback& fb);
  QoSGrant GrantFor(const SessionState& s) const;

  std::shared_ptr<const NrmService> service_;
  SessionState state_;
};

// TCP server, one thread per connection, one session per connection.
class NrmServer {
 public:
  // `port` 0 picks an ephemeral port; see port().
  static absl::StatusOr<std::unique_ptr<NrmServer>> Start(
      std::shared_ptr<const NrmService> service, const std::string& host,
      int port);
  ~NrmServer();

  NrmServer(const NrmServer&) = delete;
  NrmServer& operator=(const NrmServer&) = delete;

  int port() const { return port_; }
  void Stop();

 private:
  NrmServer(std::shared_ptr<const NrmService> service, int fd, int port);
  void AcceptLoop();
  void Serve(int fd, uint64_t session_id);

  std::shared_ptr<const NrmService> service_;
  int listen_fd_;
  int port_;
  std::atomic<bool> stopping_{false};
  std::atomic<uint64_t> next_session_{1};
  std::thread acceptor_;
  std::mutex mu_;
  std::vector<int> client_fds_;
  std::vector<std::thread> workers_;
};

// Synchronous request/response client.
class NrmClient {
 public:
  static absl::StatusOr<NrmClient> Connect(const std::string& host, int port);
  NrmClient(NrmClient&& other) noexcept;
  NrmClient& operator=(NrmClient&& other) noexcept;
  ~NrmClient();

  // Sends one line and returns the reply line, both without terminators.
  absl::StatusOr<std::string> CallRaw(std::string_view line);
  absl::StatusOr<Message> Call(const Message& msg);

 private:
  explicit NrmClient(int fd) : fd_(fd) {}
  int fd_ = -1;
  std::string buffer_;
};

// Splits "host:port"; a bare port means 127.0.0.1.
absl::Status ParseHostPort(std::string_view text, std::string& host,
                           int& port);

}  // namespace sandqos

#endif  // SANDQOS_NRM_H_
