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

#ifndef SANDQOS_TEXT_FORMAT_H_
#define SANDQOS_TEXT_FORMAT_H_

#include <string>
#include <string_view>
#include <vector>

#include "absl/status/statusor.h"

namespace sandqos {

// Shortest representation that parses back to the same double.
std::string FormatDouble(double v);

absl::StatusOr<double> ParseDouble(std::string_view text);

// Splits on `sep` without trimming; empty fields are kept.
std::vector<std::string_view> SplitFields(std::string_view line, char sep);

}  // namespace sandqos

#endif  // SANDQOS_TEXT_FORMAT_H_
