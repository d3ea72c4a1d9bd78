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

// Line-delimited JSON messages between the robot operator and the network
// operator. protocol.md describes the byte-level format.

#ifndef SANDQOS_PROTOCOL_H_
#define SANDQOS_PROTOCOL_H_

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "nlohmann/json.hpp"
#include "sandqos/kpi.h"
#include "sandqos/netchan.h"
#include "sandqos/utility.h"

namespace sandqos {

inline constexpr size_t kMaxLineBytes = 65536;

// Information element names carried verbatim on the wire.
inline constexpr char kValUeListKey[] = "list of VAL UEs";
inline constexpr char kIpAddressKey[] = "IP address";
inline constexpr char kRequirementsKey[] = "end-to-end QoS requirements";

enum class FeedbackMode { kDirect, kSimple, kDetailed };

std::string_view FeedbackModeName(FeedbackMode mode);
absl::StatusOr<FeedbackMode> ParseFeedbackMode(std::string_view name);

struct QoSRequirements {
  double latency_ms = 0.0;
  double jitter_ms = 0.0;
  double loss_rate = 0.0;
  double bandwidth_kbps = 1000.0;

  friend bool operator==(const QoSRequirements&,
                         const QoSRequirements&) = default;
};

absl::Status ValidateRequirements(const QoSRequirements& req);

// Worst-case link the requirements admit, used to simulate under a grant.
NetworkConditions ConditionsFor(const QoSRequirements& req, uint64_t seed);

struct QoSManagementRequest {
  std::vector<std::string> val_ues;
  std::string ip_address;
  QoSRequirements requirements;
  FeedbackMode mode = FeedbackMode::kDirect;

  friend bool operator==(const QoSManagementRequest&,
                         const QoSManagementRequest&) = default;
};

struct QoSGrant {
  uint64_t session_id = 0;
  uint64_t round = 0;
  std::vector<std::string> val_ues;
  std::string ip_address;
  QoSRequirements requirements;

  friend bool operator==(const QoSGrant&, const QoSGrant&) = default;
};

struct QoSDeny {
  std::string reason;

  friend bool operator==(const QoSDeny&, const QoSDeny&) = default;
};

struct SimpleFeedback {
  double emos = 1.0;
  double target_emos = 4.0;

  friend bool operator==(const SimpleFeedback&,
                         const SimpleFeedback&) = default;
};

struct DetailedFeedback {
  RobotKpis kpis;
  UtilitySpec spec;

  friend bool operator==(const DetailedFeedback&,
                         const DetailedFeedback&) = default;
};

struct ErrorReply {
  std::string code;
  std::string reason;

  friend bool operator==(const ErrorReply&, const ErrorReply&) = default;
};

using Message = std::variant<QoSManagementRequest, QoSGrant, QoSDeny,
                             SimpleFeedback, DetailedFeedback, ErrorReply>;

std::string_view MessageType(const Message& msg);

// One line without its terminator. A trailing '\r' is tolerated. The
// reserved "customer_feedback" type yields Unimplemented.
absl::StatusOr<Message> ParseMessage(std::string_view line);

// Compact JSON with members in byte order, no trailing newline.
std::string EncodeMessage(const Message& msg);

ErrorReply ErrorFromStatus(const absl::Status& status);

// Dotted IPv4 or textual IPv6.
bool IsValidIpAddress(const std::string& text);

}  // namespace sandqos

#endif  // SANDQOS_PROTOCOL_H_
