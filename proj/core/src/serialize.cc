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

#include "sandqos/serialize.h"

#include <cmath>
#include <limits>
#include <utility>

#include "absl/strings/str_cat.h"

namespace sandqos {

using nlohmann::json;

JsonReader::JsonReader(const json& j, std::string context)
    : j_(j), context_(std::move(context)) {
  if (!j_.is_object()) {
    status_ = absl::InvalidArgumentError(
        absl::StrCat(context_, ": expected a JSON object"));
  }
}

std::string JsonReader::Where(std::string_view key) const {
  return absl::StrCat(context_, ".", std::string(key));
}

void JsonReader::Fail(absl::Status status) {
  if (status_.ok()) status_ = std::move(status);
}

const json* JsonReader::Find(std::string_view key, bool required) {
  if (!status_.ok()) return nullptr;
  seen_.emplace(key);
  auto it = j_.find(std::string(key));
  if (it == j_.end()) {
    if (required) {
      Fail(absl::InvalidArgumentError(
          absl::StrCat("missing member ", Where(key))));
    }
    return nullptr;
  }
  return &*it;
}

const json* JsonReader::Member(std::string_view key, bool required) {
  return Find(key, required);
}

void JsonReader::Double(std::string_view key, double& out, bool required) {
  const json* v = Find(key, required);
  if (v == nullptr) return;
  if (!v->is_number() || !std::isfinite(v->get<double>())) {
    Fail(absl::InvalidArgumentError(
        absl::StrCat(Where(key), " must be a finite number")));
    return;
  }
  out = v->get<double>();
}

void JsonReader::OptionalDouble(std::string_view key,
                                std::optional<double>& out) {
  const json* v = Find(key, false);
  if (v == nullptr) return;
  if (v->is_null()) {
    out.reset();
    return;
  }
  if (!v->is_number() || !std::isfinite(v->get<double>())) {
    Fail(absl::InvalidArgumentError(
        absl::StrCat(Where(key), " must be a finite number or null")));
    return;
  }
  out = v->get<double>();
}

void JsonReader::Uint64(std::string_view key, uint64_t& out, bool required) {
  const json* v = Find(key, required);
  if (v == nullptr) return;
  if (!v->is_number_unsigned()) {
    Fail(absl::InvalidArgumentError(
        absl::StrCat(Where(key), " must be a non-negative integer")));
    return;
  }
  out = v->get<uint64_t>();
}

void JsonReader::Int(std::string_view key, int& out, bool required) {
  const json* v = Find(key, required);
  if (v == nullptr) return;
  if (!v->is_number_integer() ||
      v->get<int64_t>() < std::numeric_limits<int>::min() ||
      v->get<int64_t>() > std::numeric_limits<int>::max() ||
      (v->is_number_unsigned() &&
       v->get<uint64_t>() > static_cast<uint64_t>(
                                std::numeric_limits<int>::max()))) {
    Fail(absl::InvalidArgumentError(
        absl::StrCat(Where(key), " must be an integer")));
    return;
  }
  out = v->get<int>();
}

void JsonReader::Bool(std::string_view key, bool& out, bool required) {
  const json* v = Find(key, required);
  if (v == nullptr) return;
  if (!v->is_boolean()) {
    Fail(absl::InvalidArgumentError(
        absl::StrCat(Where(key), " must be true or false")));
    return;
  }
  out = v->get<bool>();
}

void JsonReader::String(std::string_view key, std::string& out,
                        bool required) {
  const json* v = Find(key, required);
  if (v == nullptr) return;
  if (!v->is_string()) {
    Fail(absl::InvalidArgumentError(
        absl::StrCat(Where(key), " must be a string")));
    return;
  }
  out = v->get<std::string>();
}

void JsonReader::DoubleList(std::string_view key, std::vector<double>& out,
                            bool required) {
  const json* v = Find(key, required);
  if (v == nullptr) return;
  if (!v->is_array()) {
    Fail(absl::InvalidArgumentError(
        absl::StrCat(Where(key), " must be an array")));
    return;
  }
  std::vector<double> values;
  for (const json& e : *v) {
    if (!e.is_number() || !std::isfinite(e.get<double>())) {
      Fail(absl::InvalidArgumentError(
          absl::StrCat(Where(key), " must hold finite numbers")));
      return;
    }
    values.push_back(e.get<double>());
  }
  out = std::move(values);
}

void JsonReader::Uint64List(std::string_view key, std::vector<uint64_t>& out,
                            bool required) {
  const json* v = Find(key, required);
  if (v == nullptr) return;
  if (!v->is_array()) {
    Fail(absl::InvalidArgumentError(
        absl::StrCat(Where(key), " must be an array")));
    return;
  }
  std::vector<uint64_t> values;
  for (const json& e : *v) {
    if (!e.is_number_unsigned()) {
      Fail(absl::InvalidArgumentError(absl::StrCat(
          Where(key), " must hold non-negative integers")));
      return;
    }
    values.push_back(e.get<uint64_t>());
  }
  out = std::move(values);
}

void JsonReader::StringList(std::string_view key,
                            std::vector<std::string>& out, bool required) {
  const json* v = Find(key, required);
  if (v == nullptr) return;
  if (!v->is_array()) {
    Fail(absl::InvalidArgumentError(
        absl::StrCat(Where(key), " must be an array")));
    return;
  }
  std::vector<std::string> values;
  for (const json& e : *v) {
    if (!e.is_string()) {
      Fail(absl::InvalidArgumentError(
          absl::StrCat(Where(key), " must hold strings")));
      return;
    }
    values.push_back(e.get<std::string>());
  }
  out = std::move(values);
}

absl::Status JsonReader::Finish() {
  if (!status_.ok()) return status_;
  for (auto it = j_.begin(); it != j_.end(); ++it) {
    if (!seen_.contains(it.key())) {
      return absl::InvalidArgumentError(
          absl::StrCat("unknown member ", Where(it.key())));
    }
  }
  return absl::OkStatus();
}

absl::StatusOr<json> ParseJson(std::string_view text) {
  json j = json::parse(text.begin(), text.end(), nullptr,
                       /*allow_exceptions=*/false);
  if (j.is_discarded()) {
    return absl::InvalidArgumentError("malformed JSON");
  }
  return j;
}

json ToJson(const NetworkConditions& cond) {
  return json{{"delay_ms", cond.delay_ms},
              {"jitter_ms", cond.jitter_ms},
              {"loss_rate", cond.loss_rate},
              {"bandwidth_kbps", cond.bandwidth_kbps},
              {"seed", cond.seed}};
}

absl::Status MergeFromJson(const json& j, NetworkConditions& cond) {
  NetworkConditions next = cond;
  JsonReader r(j, "network");
  r.Double("delay_ms", next.delay_ms, false);
  r.Double("jitter_ms", next.jitter_ms, false);
  r.Double("loss_rate", next.loss_rate, false);
  r.Double("bandwidth_kbps", next.bandwidth_kbps, false);
  r.Uint64("seed", next.seed, false);
  if (absl::Status s = r.Finish(); !s.ok()) return s;
  if (absl::Status s = ValidateConditions(next); !s.ok()) return s;
  cond = next;
  return absl::OkStatus();
}

json ToJson(const ControllerParams& ctrl) {
  json j{{"control_rate_hz", ctrl.control_rate_hz},
         {"gain_per_s", ctrl.gain},
         {"max_speed_mm_s", ctrl.max_speed},
         {"max_accel_mm_s2", ctrl.max_accel},
         {"z_compliance_mm_per_mm_s2", ctrl.z_compliance},
         {"orientation_noise_std_rad", ctrl.orientation_noise_std}};
  j["waypoint_capture_radius_mm"] =
      ctrl.waypoint_capture_radius.has_value()
          ? json(*ctrl.waypoint_capture_radius)
          : json(nullptr);
  return j;
}

absl::Status MergeFromJson(const json& j, ControllerParams& ctrl) {
  ControllerParams next = ctrl;
  JsonReader r(j, "controller");
  r.Double("control_rate_hz", next.control_rate_hz, false);
  r.Double("gain_per_s", next.gain, false);
  r.Double("max_speed_mm_s", next.max_speed, false);
  r.Double("max_accel_mm_s2", next.max_accel, false);
  r.OptionalDouble("waypoint_capture_radius_mm",
                   next.waypoint_capture_radius);
  r.Double("z_compliance_mm_per_mm_s2", next.z_compliance, false);
  r.Double("orientation_noise_std_rad", next.orientation_noise_std, false);
  if (absl::Status s = r.Finish(); !s.ok()) return s;
  if (absl::Status s = ValidateController(next); !s.ok()) return s;
  ctrl = next;
  return absl::OkStatus();
}

json ToJson(const ExogenousFactors& ex) {
  return json{{"material_score", ex.material_score},
              {"tool_score", ex.tool_score}};
}

absl::Status MergeFromJson(const json& j, ExogenousFactors& ex) {
  ExogenousFactors next = ex;
  JsonReader r(j, "exogenous");
  r.Double("material_score", next.material_score, false);
  r.Double("tool_score", next.tool_score, false);
  if (absl::Status s = r.Finish(); !s.ok()) return s;
  if (absl::Status s = ValidateExogenous(next); !s.ok()) return s;
  ex = next;
  return absl::OkStatus();
}

json ToJson(const UtilitySpec& spec) {
  json reqs = json::array();
  for (const KpiRequirement& r : spec.requirements) {
    reqs.push_back(json{{"kpi", r.kpi_name},
                        {"weight", r.weight},
                        {"good", r.good},
                        {"bad", r.bad},
                        {"direction", "lower_is_better"}});
  }
  return json{{"phase", std::string(PhaseName(spec.phase))},
              {"target_emos", spec.target_emos},
              {"requirements", std::move(reqs)}};
}

absl::StatusOr<UtilitySpec> UtilitySpecFromJson(const json& j) {
  UtilitySpec spec;
  JsonReader r(j, "utility");
  std::string phase;
  r.String("phase", phase, true);
  r.Double("target_emos", spec.target_emos, false);
  const json* reqs = r.Member("requirements", true);
  if (absl::Status s = r.Finish(); !s.ok()) return s;
  absl::StatusOr<Phase> parsed = ParsePhase(phase);
  if (!parsed.ok()) return parsed.status();
  spec.phase = *parsed;
  if (!reqs->is_array()) {
    return absl::InvalidArgumentError("utility.requirements must be an array");
  }
  for (size_t i = 0; i < reqs->size(); ++i) {
    KpiRequirement req;
    std::string direction = "lower_is_better";
    JsonReader rr((*reqs)[i], absl::StrCat("utility.requirements[", i, "]"));
    rr.String("kpi", req.kpi_name, true);
    rr.Double("weight", req.weight, true);
    rr.Double("good", req.good, true);
    rr.Double("bad", req.bad, true);
    rr.String("direction", direction, false);
    if (absl::Status s = rr.Finish(); !s.ok()) return s;
    if (direction != "lower_is_better") {
      return absl::InvalidArgumentError(
          absl::StrCat("unsupported direction '", direction, "'"));
    }
    spec.requirements.push_back(std::move(req));
  }
  if (absl::Status s = ValidateUtilitySpec(spec); !s.ok()) return s;
  return spec;
}

json ToJson(const RobotKpis& kpis) {
  json j{{"phase", std::string(PhaseName(kpis.phase))}};
  for (const std::string& name : KpiNames()) j[name] = *KpiValue(kpis, name);
  return j;
}

absl::StatusOr<RobotKpis> RobotKpisFromJson(const json& j) {
  RobotKpis kpis;
  JsonReader r(j, "kpis");
  std::string phase;
  r.String("phase", phase, true);
  for (const std::string& name : KpiNames()) {
    double v = 0.0;
    r.Double(name, v, true);
    if (r.ok()) (void)SetKpiValue(kpis, name, v);
  }
  if (absl::Status s = r.Finish(); !s.ok()) return s;
  absl::StatusOr<Phase> parsed = ParsePhase(phase);
  if (!parsed.ok()) return parsed.status();
  kpis.phase = *parsed;
  if (absl::Status s = ValidateKpis(kpis); !s.ok()) return s;
  return kpis;
}

}  // namespace sandqos
