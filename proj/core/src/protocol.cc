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

#include "sandqos/protocol.h"

#include <arpa/inet.h>

#include <cmath>
#include <utility>

#include "absl/strings/str_cat.h"
#include "sandqos/serialize.h"

namespace sandqos {
namespace {

using nlohmann::json;

json RequirementsToJson(const QoSRequirements& req) {
  return json{{"latency_ms", req.latency_ms},
              {"jitter_ms", req.jitter_ms},
              {"loss_rate", req.loss_rate},
              {"bandwidth_kbps", req.bandwidth_kbps}};
}

absl::StatusOr<QoSRequirements> RequirementsFromJson(const json& j) {
  QoSRequirements req;
  JsonReader r(j, kRequirementsKey);
  r.Double("latency_ms", req.latency_ms, true);
  r.Double("jitter_ms", req.jitter_ms, true);
  r.Double("loss_rate", req.loss_rate, true);
  r.Double("bandwidth_kbps", req.bandwidth_kbps, true);
  if (absl::Status s = r.Finish(); !s.ok()) return s;
  if (absl::Status s = ValidateRequirements(req); !s.ok()) return s;
  return req;
}

absl::Status CheckEndpoint(const std::vector<std::string>& ues,
                           const std::string& ip) {
  if (ues.empty()) {
    return absl::InvalidArgumentError(
        absl::StrCat("'", kValUeListKey, "' must not be empty"));
  }
  for (const std::string& ue : ues) {
    if (ue.empty()) {
      return absl::InvalidArgumentError("VAL UE identifiers must be non-empty");
    }
  }
  if (!IsValidIpAddress(ip)) {
    return absl::InvalidArgumentError(
        absl::StrCat("'", kIpAddressKey, "' is not a valid address"));
  }
  return absl::OkStatus();
}

absl::StatusOr<Message> ParseRequest(JsonReader& r) {
  QoSManagementRequest req;
  std::string mode = "direct";
  r.String("mode", mode, false);
  r.StringList(kValUeListKey, req.val_ues, true);
  r.String(kIpAddressKey, req.ip_address, true);
  const json* reqs = r.Member(kRequirementsKey, true);
  if (absl::Status s = r.Finish(); !s.ok()) return s;
  absl::StatusOr<FeedbackMode> m = ParseFeedbackMode(mode);
  if (!m.ok()) return m.status();
  req.mode = *m;
  if (absl::Status s = CheckEndpoint(req.val_ues, req.ip_address); !s.ok()) {
    return s;
  }
  absl::StatusOr<QoSRequirements> q = RequirementsFromJson(*reqs);
  if (!q.ok()) return q.status();
  req.requirements = *q;
  return req;
}

absl::StatusOr<Message> ParseGrant(JsonReader& r) {
  QoSGrant g;
  r.Uint64("session_id", g.session_id, true);
  r.Uint64("round", g.round, true);
  r.StringList(kValUeListKey, g.val_ues, true);
  r.String(kIpAddressKey, g.ip_address, true);
  const json* reqs = r.Member(kRequirementsKey, true);
  if (absl::Status s = r.Finish(); !s.ok()) return s;
  if (absl::Status s = CheckEndpoint(g.val_ues, g.ip_address); !s.ok()) {
    return s;
  }
  absl::StatusOr<QoSRequirements> q = RequirementsFromJson(*reqs);
  if (!q.ok()) return q.status();
  g.requirements = *q;
  return g;
}

absl::Status CheckEmos(double v, std::string_view what) {
  if (!(v >= Emos::kMin && v <= Emos::kMax)) {
    return absl::InvalidArgumentError(
        absl::StrCat(std::string(what), " must lie in [1, 5]"));
  }
  return absl::OkStatus();
}

absl::StatusOr<Message> ParseSimple(JsonReader& r) {
  SimpleFeedback f;
  r.Double("emos", f.emos, true);
  r.Double("target_emos", f.target_emos, true);
  if (absl::Status s = r.Finish(); !s.ok()) return s;
  if (absl::Status s = CheckEmos(f.emos, "emos"); !s.ok()) return s;
  if (absl::Status s = CheckEmos(f.target_emos, "target_emos"); !s.ok()) {
    return s;
  }
  return f;
}

absl::StatusOr<Message> ParseDetailed(JsonReader& r) {
  const json* kpis = r.Member("kpis", true);
  const json* spec = r.Member("utility_spec", true);
  if (absl::Status s = r.Finish(); !s.ok()) return s;
  DetailedFeedback f;
  absl::StatusOr<RobotKpis> k = RobotKpisFromJson(*kpis);
  if (!k.ok()) return k.status();
  absl::StatusOr<UtilitySpec> u = UtilitySpecFromJson(*spec);
  if (!u.ok()) return u.status();
  if (u->phase != k->phase) {
    return absl::InvalidArgumentError("utility_spec and kpis disagree on phase");
  }
  for (const KpiRequirement& req : u->requirements) {
    if (!KpiValue(k.value(), req.kpi_name).ok()) {
      return absl::InvalidArgumentError(
          absl::StrCat("utility_spec names unknown KPI '", req.kpi_name, "'"));
    }
  }
  f.kpis = *k;
  f.spec = *u;
  return f;
}

std::string StatusCodeName(absl::StatusCode code) {
  switch (code) {
    case absl::StatusCode::kInvalidArgument:
      return "invalid_argument";
    case absl::StatusCode::kFailedPrecondition:
      return "failed_precondition";
    case absl::StatusCode::kUnimplemented:
      return "unimplemented";
    case absl::StatusCode::kNotFound:
      return "not_found";
    case absl::StatusCode::kOutOfRange:
      return "out_of_range";
    case absl::StatusCode::kResourceExhausted:
      return "resource_exhausted";
    default:
      return "internal";
  }
}

}  // namespace

std::string_view FeedbackModeName(FeedbackMode mode) {
  switch (mode) {
    case FeedbackMode::kDirect:
      return "direct";
    case FeedbackMode::kSimple:
      return "simple";
    case FeedbackMode::kDetailed:
      return "detailed";
  }
  return "direct";
}

absl::StatusOr<FeedbackMode> ParseFeedbackMode(std::string_view name) {
  if (name == "direct") return FeedbackMode::kDirect;
  if (name == "simple") return FeedbackMode::kSimple;
  if (name == "detailed") return FeedbackMode::kDetailed;
  return absl::InvalidArgumentError(
      absl::StrCat("unknown mode '", std::string(name), "'"));
}

absl::Status ValidateRequirements(const QoSRequirements& req) {
  const bool finite = std::isfinite(req.latency_ms) &&
                      std::isfinite(req.jitter_ms) &&
                      std::isfinite(req.loss_rate) &&
                      std::isfinite(req.bandwidth_kbps);
  if (!finite || req.latency_ms < 0.0 || req.jitter_ms < 0.0 ||
      req.loss_rate < 0.0) {
    return absl::InvalidArgumentError(
        "QoS requirements must be finite and >= 0");
  }
  if (req.loss_rate > 1.0) {
    return absl::InvalidArgumentError("loss_rate must lie in [0, 1]");
  }
  if (!(req.bandwidth_kbps > 0.0)) {
    return absl::InvalidArgumentError("bandwidth_kbps must be > 0");
  }
  if (req.jitter_ms > req.latency_ms) {
    return absl::InvalidArgumentError("jitter_ms must not exceed latency_ms");
  }
  return absl::OkStatus();
}

NetworkConditions ConditionsFor(const QoSRequirements& req, uint64_t seed) {
  NetworkConditions cond;
  cond.delay_ms = req.latency_ms;
  cond.jitter_ms = req.jitter_ms;
  cond.loss_rate = req.loss_rate;
  cond.bandwidth_kbps = req.bandwidth_kbps;
  cond.seed = seed;
  return cond;
}

std::string_view MessageType(const Message& msg) {
  struct Visitor {
    std::string_view operator()(const QoSManagementRequest&) {
      return "qos_request";
    }
    std::string_view operator()(const QoSGrant&) { return "qos_grant"; }
    std::string_view operator()(const QoSDeny&) { return "qos_deny"; }
    std::string_view operator()(const SimpleFeedback&) {
      return "simple_feedback";
    }
    std::string_view operator()(const DetailedFeedback&) {
      return "detailed_feedback";
    }
    std::string_view operator()(const ErrorReply&) { return "error"; }
  };
  return std::visit(Visitor{}, msg);
}

absl::StatusOr<Message> ParseMessage(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  if (line.size() > kMaxLineBytes) {
    return absl::InvalidArgumentError(
        absl::StrCat("line exceeds ", kMaxLineBytes, " bytes"));
  }
  if (line.find('\n') != std::string_view::npos) {
    return absl::InvalidArgumentError("embedded newline");
  }
  absl::StatusOr<json> j = ParseJson(line);
  if (!j.ok()) return j.status();
  JsonReader r(*j, "message");
  std::string type;
  r.String("type", type, true);
  if (!r.ok()) return r.Finish();
  if (type == "qos_request") return ParseRequest(r);
  if (type == "qos_grant") return ParseGrant(r);
  if (type == "simple_feedback") return ParseSimple(r);
  if (type == "detailed_feedback") return ParseDetailed(r);
  if (type == "qos_deny") {
    QoSDeny d;
    r.String("reason", d.reason, true);
    if (absl::Status s = r.Finish(); !s.ok()) return s;
    return d;
  }
  if (type == "error") {
    ErrorReply e;
    r.String("code", e.code, true);
    r.String("reason", e.reason, true);
    if (absl::Status s = r.Finish(); !s.ok()) return s;
    return e;
  }
  if (type == "customer_feedback") {
    return absl::UnimplementedError(
        "customer_feedback is reserved and not supported");
  }
  return absl::InvalidArgumentError(
      absl::StrCat("unknown message type '", type, "'"));
}

std::string EncodeMessage(const Message& msg) {
  json j;
  j["type"] = std::string(MessageType(msg));
  if (const auto* m = std::get_if<QoSManagementRequest>(&msg)) {
    j["mode"] = std::string(FeedbackModeName(m->mode));
    j[kValUeListKey] = m->val_ues;
    j[kIpAddressKey] = m->ip_address;
    j[kRequirementsKey] = RequirementsToJson(m->requirements);
  } else if (const auto* m = std::get_if<QoSGrant>(&msg)) {
    j["session_id"] = m->session_id;
    j["round"] = m->round;
    j[kValUeListKey] = m->val_ues;
    j[kIpAddressKey] = m->ip_address;
    j[kRequirementsKey] = RequirementsToJson(m->requirements);
  } else if (const auto* m = std::get_if<QoSDeny>(&msg)) {
    j["reason"] = m->reason;
  } else if (const auto* m = std::get_if<SimpleFeedback>(&msg)) {
    j["emos"] = m->emos;
    j["target_emos"] = m->target_emos;
  } else if (const auto* m = std::get_if<DetailedFeedback>(&msg)) {
    j["kpis"] = ToJson(m->kpis);
    j["utility_spec"] = ToJson(m->spec);
  } else if (const auto* m = std::get_if<ErrorReply>(&msg)) {
    j["code"] = m->code;
    j["reason"] = m->reason;
  }
  return j.dump(-1, ' ', false, json::error_handler_t::replace);
}

ErrorReply ErrorFromStatus(const absl::Status& status) {
  return ErrorReply{StatusCodeName(status.code()),
                    std::string(status.message())};
}

bool IsValidIpAddress(const std::string& text) {
  if (text.find('\0') != std::string::npos) return false;
  unsigned char buf[16];
  return inet_pton(AF_INET, text.c_str(), buf) == 1 ||
         inet_pton(AF_INET6, text.c_str(), buf) == 1;
}

}  // namespace sandqos
