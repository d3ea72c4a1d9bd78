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

// JSON forms of the configuration and feedback records. Field names carry
// their units. Readers reject unknown members so that a misspelt key is an
// error instead of a silently ignored setting.

#ifndef SANDQOS_SERIALIZE_H_
#define SANDQOS_SERIALIZE_H_

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "nlohmann/json.hpp"
#include "sandqos/kpi.h"
#include "sandqos/netchan.h"
#include "sandqos/path.h"
#include "sandqos/utility.h"

namespace sandqos {

// Checked member access for one JSON object. The first failure is kept and
// later calls become no-ops; Finish() reports it, or any member that no call
// asked for.
class JsonReader {
 public:
  JsonReader(const nlohmann::json& j, std::string context);
  // Keeps a reference to `j`.
  JsonReader(nlohmann::json&& j, std::string context) = delete;

  // Absent optional members leave `out` untouched.
  void Double(std::string_view key, double& out, bool required);
  void OptionalDouble(std::string_view key, std::optional<double>& out);
  void Uint64(std::string_view key, uint64_t& out, bool required);
  void Int(std::string_view key, int& out, bool required);
  void Bool(std::string_view key, bool& out, bool required);
  void String(std::string_view key, std::string& out, bool required);
  void DoubleList(std::string_view key, std::vector<double>& out,
                  bool required);
  void Uint64List(std::string_view key, std::vector<uint64_t>& out,
                  bool required);
  void StringList(std::string_view key, std::vector<std::string>& out,
                  bool required);
  // Marks the member consumed and returns it, or nullptr when absent.
  const nlohmann::json* Member(std::string_view key, bool required);

  void Fail(absl::Status status);
  bool ok() const { return status_.ok(); }
  absl::Status Finish();

 private:
  const nlohmann::json* Find(std::string_view key, bool required);
  std::string Where(std::string_view key) const;

  const nlohmann::json& j_;
  std::string context_;
  std::set<std::string, std::less<>> seen_;
  absl::Status status_;
};

absl::StatusOr<nlohmann::json> ParseJson(std::string_view text);

nlohmann::json ToJson(const NetworkConditions& cond);
// Overwrites the members present in `j`, then validates the result.
absl::Status MergeFromJson(const nlohmann::json& j, NetworkConditions& cond);

nlohmann::json ToJson(const ControllerParams& ctrl);
absl::Status MergeFromJson(const nlohmann::json& j, ControllerParams& ctrl);

nlohmann::json ToJson(const ExogenousFactors& ex);
absl::Status MergeFromJson(const nlohmann::json& j, ExogenousFactors& ex);

nlohmann::json ToJson(const UtilitySpec& spec);
// "phase" and "requirements" are required; "target_emos" defaults to 4.
absl::StatusOr<UtilitySpec> UtilitySpecFromJson(const nlohmann::json& j);

// Flat record keyed by KPI name plus "phase". Every member is required.
nlohmann::json ToJson(const RobotKpis& kpis);
absl::StatusOr<RobotKpis> RobotKpisFromJson(const nlohmann::json& j);

}  // namespace sandqos

#endif  // SANDQOS_SERIALIZE_H_
