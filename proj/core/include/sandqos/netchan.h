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

// Emulated command channel between the remote controller and the plant.
//
// Virtual time only: the simulation loop drives Send/Poll with its own
// clock. A Channel is single-owner; independent channels share nothing.

#ifndef SANDQOS_NETCHAN_H_
#define SANDQOS_NETCHAN_H_

#include <cstddef>
#include <cstdint>
#include <deque>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "sandqos/rng.h"

namespace sandqos {

// Network QoS of the emulated link.
struct NetworkConditions {
  double delay_ms = 0.0;
  // Half-width of the uniform delay perturbation.
  double jitter_ms = 0.0;
  double loss_rate = 0.0;
  double bandwidth_kbps = 1000.0;
  uint64_t seed = 1;

  friend bool operator==(const NetworkConditions&,
                         const NetworkConditions&) = default;
};

absl::Status ValidateConditions(const NetworkConditions& cond);

struct VelocityCommand {
  double vx = 0.0;  // mm/s
  double vy = 0.0;  // mm/s

  friend bool operator==(const VelocityCommand&,
                         const VelocityCommand&) = default;
};

struct TimedMessage {
  double send_time = 0.0;  // s
  size_t payload_size = 0;  // bytes
  uint64_t sequence = 0;
  VelocityCommand payload;

  friend bool operator==(const TimedMessage&, const TimedMessage&) = default;
};

struct Delivery {
  double delivery_time = 0.0;  // s
  TimedMessage message;

  friend bool operator==(const Delivery&, const Delivery&) = default;
};

class Channel {
 public:
  static absl::StatusOr<Channel> Create(const NetworkConditions& cond);

  // Each call draws exactly two uniforms from the channel stream: the loss
  // draw first, then the jitter draw, whether or not the message survives.
  absl::Status Send(const TimedMessage& msg);

  // Removes and returns every in-flight message due at or before `now`,
  // in delivery order. Polling backwards in time returns nothing.
  std::vector<Delivery> Poll(double now);

  const NetworkConditions& conditions() const { return cond_; }
  size_t in_flight() const { return queue_.size(); }
  uint64_t sent() const { return sent_; }
  uint64_t dropped() const { return dropped_; }

 private:
  explicit Channel(const NetworkConditions& cond)
      : cond_(cond), rng_(cond.seed) {}

  NetworkConditions cond_;
  Rng rng_;
  std::deque<Delivery> queue_;
  double last_send_time_ = 0.0;
  double last_delivery_time_ = 0.0;
  double last_poll_time_ = 0.0;
  bool any_sent_ = false;
  uint64_t sent_ = 0;
  uint64_t dropped_ = 0;
};

}  // namespace sandqos

#endif  // SANDQOS_NETCHAN_H_
