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

#ifndef SANDQOS_RNG_H_
#define SANDQOS_RNG_H_

#include <cstdint>
#include <random>

namespace sandqos {

// Seeded random stream with a platform-independent output sequence.
//
// std::mt19937_64 is fully specified by the standard, but the std
// distributions are not, so uniform and normal variates are derived here
// from the raw engine output. Every call consumes a fixed number of engine
// outputs: Uniform01 one, Gaussian two.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  uint64_t NextRaw() { return engine_(); }

  // Uniform on [0, 1) with 53 bits of resolution.
  double Uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform01(); }

  // Standard normal via Box-Muller; the second variate is discarded so the
  // stream position never depends on call history.
  double Gaussian();

 private:
  std::mt19937_64 engine_;
};

// splitmix64 finalizer; derives independent sub-stream seeds from one seed.
uint64_t MixSeed(uint64_t seed, uint64_t salt);

}  // namespace sandqos

#endif  // SANDQOS_RNG_H_
