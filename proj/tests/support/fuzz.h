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

#ifndef SANDQOS_TESTS_SUPPORT_FUZZ_H_
#define SANDQOS_TESTS_SUPPORT_FUZZ_H_

#include <cstdint>
#include <string>
#include <vector>

namespace sandqos::testing {

// Well-formed client messages: a request, simple and detailed feedback.
std::vector<std::string> ValidClientLines();

// `count` lines that are malformed by construction: random bytes, strict
// prefixes, unknown members, bad types, wrong value types, out-of-range
// scores, missing members and trailing garbage. None contains '\n'.
std::vector<std::string> MalformedLines(uint64_t seed, int count);

}  // namespace sandqos::testing

#endif  // SANDQOS_TESTS_SUPPORT_FUZZ_H_
