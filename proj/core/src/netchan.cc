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

#include "sandqos/netchan.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "absl/strings/str_cat.h"

namespace sandqos {

absl::Status ValidateConditions(const NetworkConditions& cond) {
  if (!std::isfinite(cond.delay_ms) || cond.delay_ms < 0.0) {
    return absl::InvalidArgumentError(
        absl::StrCat("delay_ms must be finite and >= 0, got ", cond.delay_ms));
  }
  if (!std::isfinite(cond.jitter_ms) || cond.jitter_ms < 0.0) {
    return absl::InvalidArgumentError(absl::StrCat(
        "jitter_ms must be finite and >= 0, got ", cond.jitter_ms));
  }
  if (cond.delay_ms - cond.jitter_ms < 0.0) {
    return absl::InvalidArgumentError(
        absl::StrCat("jitter_ms (", cond.jitter_ms, ") exceeds delay_ms (",
                     cond.delay_ms, ")"));
  }
  if (!(cond.loss_rate >= 0.0 && cond.loss_rate <= 1.0)) {
    return absl::InvalidArgumentError(
        absl::StrCat("loss_rate must lie in [0, 1], got ", cond.loss_rate));
  }
  if (!std::isfinite(cond.bandwidth_kbps) || cond.bandwidth_kbps <= 0.0) {
    return absl::InvalidArgumentError(absl::StrCat(
        "bandwidth_kbps must be finite and > 0, got ", cond.bandwidth_kbps));
  }
  return absl::OkStatus();
}

absl::StatusOr<Channel> Channel::Create(const NetworkConditions& cond) {
  if (absl::Status s = ValidateConditions(cond); !s.ok()) return s;
  return Channel(cond);
}

absl::Status Channel::Send(const TimedMessage& msg) {
  if (!std::isfinite(msg.send_time) || msg.send_time < 0.0) {
    return absl::InvalidArgumentError(
        absl::StrCat("send_time must be finite and >= 0, got ", msg.send_time));
  }
  if (any_sent_ && msg.send_time < last_send_time_) {
    return absl::FailedPreconditionError(
        absl::StrCat("out-of-order send: ", msg.send_time, " < ",
                     last_send_time_));
  }
  any_sent_ = true;
  last_send_time_ = msg.send_time;
  ++sent_;

  const double loss_draw = rng_.Uniform01();
  const double jitter_draw = rng_.Uniform01();
  if (loss_draw < cond_.loss_rate) {
    ++dropped_;
    return absl::OkStatus();
  }

  const double delay_ms = std::max(
      0.0, cond_.delay_ms + cond_.jitter_ms * (2.0 * jitter_draw - 1.0));
  const double serialization_s =
      static_cast<double>(msg.payload_size) * 8.0 /
      (cond_.bandwidth_kbps * 1000.0);
  double delivery = msg.send_time + delay_ms * 1e-3 + serialization_s;
  // Clip to preserve FIFO order among survivors.
  delivery = std::max(delivery, last_delivery_time_);
  last_delivery_time_ = delivery;
  queue_.push_back(Delivery{delivery, msg});
  return absl::OkStatus();
}

std::vector<Delivery> Channel::Poll(double now) {
  std::vector<Delivery> out;
  if (now < last_poll_time_) return out;
  last_poll_time_ = now;
  while (!queue_.empty() && queue_.front().delivery_time <= now) {
    out.push_back(queue_.front());
    queue_.pop_front();
  }
  return out;
}

}  // namespace sandqos
