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

#include "sandqos/nrm.h"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstring>
#include <utility>

#include "absl/strings/str_cat.h"

namespace sandqos {
namespace {

double Lerp(double a, double b, double u) { return a + (b - a) * u; }

absl::Status SendAll(int fd, std::string_view data) {
  while (!data.empty()) {
    const ssize_t n = ::send(fd, data.data(), data.size(), MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      return absl::UnavailableError(
          absl::StrCat("send failed: ", std::strerror(errno)));
    }
    data.remove_prefix(static_cast<size_t>(n));
  }
  return absl::OkStatus();
}

}  // namespace

absl::StatusOr<CalibrationTable> CalibrationTable::Create(
    std::vector<CalibrationRow> rows) {
  if (rows.size() < 2) {
    return absl::InvalidArgumentError("calibration table needs >= 2 rows");
  }
  for (size_t i = 0; i < rows.size(); ++i) {
    if (!std::isfinite(rows[i].delay_ms) || rows[i].delay_ms < 0.0) {
      return absl::InvalidArgumentError("table delays must be finite and >= 0");
    }
    if (i > 0 && !(rows[i].delay_ms > rows[i - 1].delay_ms)) {
      return absl::InvalidArgumentError(
          "table delays must be strictly increasing");
    }
    if (absl::Status s = ValidateKpis(rows[i].kpis); !s.ok()) return s;
  }
  return CalibrationTable(std::move(rows));
}

RobotKpis CalibrationTable::PredictKpis(double delay_ms) const {
  if (delay_ms <= rows_.front().delay_ms) return rows_.front().kpis;
  if (delay_ms >= rows_.back().delay_ms) return rows_.back().kpis;
  size_t hi = 1;
  while (rows_[hi].delay_ms < delay_ms) ++hi;
  const CalibrationRow& a = rows_[hi - 1];
  const CalibrationRow& b = rows_[hi];
  const double u = (delay_ms - a.delay_ms) / (b.delay_ms - a.delay_ms);
  RobotKpis out = a.kpis;
  for (const std::string& name : KpiNames()) {
    (void)SetKpiValue(out, name,
                      Lerp(*KpiValue(a.kpis, name), *KpiValue(b.kpis, name), u));
  }
  return out;
}

absl::StatusOr<QoSRequirements> TranslateGnw(const UtilitySpec& spec,
                                             const CalibrationTable& table,
                                             const QoSRequirements& defaults) {
  if (absl::Status s = ValidateUtilitySpec(spec); !s.ok()) return s;
  std::optional<double> budget;
  for (const CalibrationRow& row : table.rows()) {
    RobotKpis predicted = table.PredictKpis(row.delay_ms);
    predicted.phase = spec.phase;
    absl::StatusOr<Emos> e = EmosRobot(predicted, spec);
    if (!e.ok()) return e.status();
    if (e->value() < spec.target_emos) break;
    budget = row.delay_ms;
  }
  if (!budget.has_value()) {
    return absl::FailedPreconditionError(absl::StrCat(
        "no table delay reaches eMOS ", spec.target_emos,
        "; relax the target or change the process"));
  }
  QoSRequirements out = defaults;
  out.latency_ms = *budget;
  out.jitter_ms = 0.0;
  return out;
}

absl::Status ValidateCaps(const PolicyCaps& caps) {
  if (!(caps.min_latency_ms >= 0.0) ||
      !(caps.max_latency_ms >= caps.min_latency_ms) ||
      !std::isfinite(caps.max_latency_ms)) {
    return absl::InvalidArgumentError(
        "need 0 <= min_latency_ms <= max_latency_ms");
  }
  if (!(caps.max_bandwidth_kbps > 0.0) ||
      !std::isfinite(caps.max_bandwidth_kbps)) {
    return absl::InvalidArgumentError("max_bandwidth_kbps must be > 0");
  }
  return absl::OkStatus();
}

SessionState AdaptSimple(const SessionState& state, double emos,
                         double target, const PolicyCaps& caps) {
  SessionState next = state;
  double& budget = next.granted.latency_ms;
  const double floor = std::max(kLatencyFloorMs, caps.min_latency_ms);
  if (emos < target) {
    budget = std::max(floor, budget / 2.0);
    next.good_streak = 0;
  } else if (emos >= target + kAimdMargin) {
    if (++next.good_streak >= kAimdPatience) {
      budget = std::min(caps.max_latency_ms, budget + kAimdIncreaseMs);
      next.good_streak = 0;
    }
  } else {
    next.good_streak = 0;
  }
  next.granted.jitter_ms = std::min(next.granted.jitter_ms, budget);
  return next;
}

NrmSession::NrmSession(std::shared_ptr<const NrmService> service,
                       uint64_t session_id)
    : service_(std::move(service)) {
  state_.session_id = session_id;
}

QoSGrant NrmSession::GrantFor(const SessionState& s) const {
  return QoSGrant{s.session_id, s.round, s.val_ues, s.ip_address, s.granted};
}

absl::StatusOr<Message> NrmSession::OnRequest(
    const QoSManagementRequest& req) {
  const PolicyCaps& caps = service_->caps;
  if (req.requirements.latency_ms < caps.min_latency_ms) {
    return QoSDeny{absl::StrCat("latency_ms ", req.requirements.latency_ms,
                                " is below the operator floor of ",
                                caps.min_latency_ms, " ms")};
  }
  if (req.requirements.bandwidth_kbps > caps.max_bandwidth_kbps) {
    return QoSDeny{absl::StrCat("bandwidth_kbps ",
                                req.requirements.bandwidth_kbps,
                                " exceeds the cap of ",
                                caps.max_bandwidth_kbps)};
  }
  SessionState next;
  next.session_id = state_.session_id;
  next.active = true;
  next.mode = req.mode;
  next.val_ues = req.val_ues;
  next.ip_address = req.ip_address;
  next.granted = req.requirements;
  next.granted.latency_ms =
      std::min(next.granted.latency_ms, caps.max_latency_ms);
  next.granted.jitter_ms =
      std::min(next.granted.jitter_ms, next.granted.latency_ms);
  state_ = std::move(next);
  return GrantFor(state_);
}

absl::StatusOr<Message> NrmSession::OnSimple(const SimpleFeedback& fb) {
  if (!state_.active || state_.mode != FeedbackMode::kSimple) {
    return absl::FailedPreconditionError(
        "simple_feedback needs an active session in simple mode");
  }
  SessionState next =
      AdaptSimple(state_, fb.emos, fb.target_emos, service_->caps);
  ++next.round;
  next.history.push_back({next.round, fb.emos, std::nullopt});
  state_ = std::move(next);
  return GrantFor(state_);
}

absl::StatusOr<Message> NrmSession::OnDetailed(const DetailedFeedback& fb) {
  if (!state_.active || state_.mode != FeedbackMode::kDetailed) {
    return absl::FailedPreconditionError(
        "detailed_feedback needs an active session in detailed mode");
  }
  if (!service_->table.has_value()) {
    return absl::FailedPreconditionError(
        "this operator has no calibration table");
  }
  absl::StatusOr<Emos> measured = EmosRobot(fb.kpis, fb.spec);
  if (!measured.ok()) return measured.status();
  QoSRequirements defaults = service_->defaults;
  defaults.loss_rate = state_.granted.loss_rate;
  defaults.bandwidth_kbps = state_.granted.bandwidth_kbps;
  absl::StatusOr<QoSRequirements> req =
      TranslateGnw(fb.spec, *service_->table, defaults);
  if (!req.ok()) {
    if (req.status().code() == absl::StatusCode::kFailedPrecondition) {
      return QoSDeny{std::string(req.status().message())};
    }
    return req.status();
  }
  const PolicyCaps& caps = service_->caps;
  const double floor = std::max(kLatencyFloorMs, caps.min_latency_ms);
  // The table is optimistic for this robot: fall back to halving.
  if (measured->value() < fb.spec.target_emos &&
      req->latency_ms >= state_.granted.latency_ms) {
    req->latency_ms = state_.granted.latency_ms / 2.0;
  }
  req->latency_ms =
      std::clamp(req->latency_ms, floor, caps.max_latency_ms);
  SessionState next = state_;
  next.granted = *req;
  next.good_streak = 0;
  ++next.round;
  next.history.push_back({next.round, measured->value(), fb.kpis});
  state_ = std::move(next);
  return GrantFor(state_);
}

absl::StatusOr<Message> NrmSession::Dispatch(const Message& msg) {
  if (const auto* m = std::get_if<QoSManagementRequest>(&msg)) {
    return OnRequest(*m);
  }
  if (const auto* m = std::get_if<SimpleFeedback>(&msg)) return OnSimple(*m);
  if (const auto* m = std::get_if<DetailedFeedback>(&msg)) {
    return OnDetailed(*m);
  }
  return absl::InvalidArgumentError(absl::StrCat(
      "message type '", std::string(MessageType(msg)),
      "' is not accepted by the operator"));
}

Message NrmSession::Handle(std::string_view line) {
  absl::StatusOr<Message> msg = ParseMessage(line);
  if (!msg.ok()) return ErrorFromStatus(msg.status());
  absl::StatusOr<Message> reply = Dispatch(*msg);
  if (!reply.ok()) return ErrorFromStatus(reply.status());
  return *std::move(reply);
}

std::string NrmSession::HandleLine(std::string_view line) {
  return EncodeMessage(Handle(line));
}

absl::Status ParseHostPort(std::string_view text, std::string& host,
                           int& port) {
  std::string_view port_text = text;
  std::string h = "127.0.0.1";
  if (const size_t colon = text.rfind(':'); colon != std::string_view::npos) {
    h = std::string(text.substr(0, colon));
    port_text = text.substr(colon + 1);
    if (h.size() >= 2 && h.front() == '[' && h.back() == ']') {
      h = h.substr(1, h.size() - 2);
    }
  }
  int p = 0;
  if (port_text.empty() || port_text.size() > 5) {
    return absl::InvalidArgumentError(
        absl::StrCat("bad address '", std::string(text), "'"));
  }
  for (char c : port_text) {
    if (c < '0' || c > '9') {
      return absl::InvalidArgumentError(
          absl::StrCat("bad port in '", std::string(text), "'"));
    }
    p = p * 10 + (c - '0');
  }
  if (p > 65535) return absl::InvalidArgumentError("port out of range");
  host = h.empty() ? "127.0.0.1" : h;
  port = p;
  return absl::OkStatus();
}

absl::StatusOr<std::unique_ptr<NrmServer>> NrmServer::Start(
    std::shared_ptr<const NrmService> service, const std::string& host,
    int port) {
  if (absl::Status s = ValidateCaps(service->caps); !s.ok()) return s;
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  hints.ai_flags = AI_PASSIVE | AI_NUMERICSERV;
  addrinfo* res = nullptr;
  const std::string port_text = std::to_string(port);
  if (int rc = ::getaddrinfo(host.c_str(), port_text.c_str(), &hints, &res);
      rc != 0) {
    return absl::InvalidArgumentError(
        absl::StrCat("cannot resolve ", host, ": ", ::gai_strerror(rc)));
  }
  int fd = -1;
  std::string error = "no usable address";
  for (addrinfo* ai = res; ai != nullptr; ai = ai->ai_next) {
    fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
    if (fd < 0) continue;
    int one = 1;
    ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    if (::bind(fd, ai->ai_addr, ai->ai_addrlen) == 0 &&
        ::listen(fd, 16) == 0) {
      break;
    }
    error = std::strerror(errno);
    ::close(fd);
    fd = -1;
  }
  ::freeaddrinfo(res);
  if (fd < 0) {
    return absl::UnavailableError(
        absl::StrCat("cannot listen on ", host, ":", port, ": ", error));
  }
  sockaddr_storage addr{};
  socklen_t len = sizeof(addr);
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
  const int bound =
      addr.ss_family == AF_INET6
          ? ntohs(reinterpret_cast<sockaddr_in6*>(&addr)->sin6_port)
          : ntohs(reinterpret_cast<sockaddr_in*>(&addr)->sin_port);
  std::unique_ptr<NrmServer> server(
      new NrmServer(std::move(service), fd, bound));
  server->acceptor_ = std::thread([s = server.get()] { s->AcceptLoop(); });
  return server;
}

NrmServer::NrmServer(std::shared_ptr<const NrmService> service, int fd,
                     int port)
    : service_(std::move(service)), listen_fd_(fd), port_(port) {}

NrmServer::~NrmServer() { Stop(); }

void NrmServer::Stop() {
  if (stopping_.exchange(true)) return;
  ::shutdown(listen_fd_, SHUT_RDWR);
  ::close(listen_fd_);
  if (acceptor_.joinable()) acceptor_.join();
  std::vector<std::thread> workers;
  {
    std::lock_guard<std::mutex> lock(mu_);
    for (int fd : client_fds_) ::shutdown(fd, SHUT_RDWR);
    workers.swap(workers_);
  }
  for (std::thread& t : workers) t.join();
}

void NrmServer::AcceptLoop() {
  while (!stopping_.load()) {
    const int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) {
      if (errno == EINTR) continue;
      return;
    }
    std::lock_guard<std::mutex> lock(mu_);
    if (stopping_.load()) {
      ::close(fd);
      return;
    }
    client_fds_.push_back(fd);
    const uint64_t id = next_session_.fetch_add(1);
    workers_.emplace_back([this, fd, id] { Serve(fd, id); });
  }
}

void NrmServer::Serve(int fd, uint64_t session_id) {
  NrmSession session(service_, session_id);
  std::string buffer;
  bool discarding = false;
  char chunk[4096];
  while (true) {
    const ssize_t n = ::recv(fd, chunk, sizeof(chunk), 0);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) break;
    buffer.append(chunk, static_cast<size_t>(n));
    size_t start = 0;
    bool failed = false;
    for (size_t nl; (nl = buffer.find('\n', start)) != std::string::npos;
         start = nl + 1) {
      std::string reply;
      if (discarding) {
        discarding = false;
        continue;
      }
      reply = session.HandleLine(
          std::string_view(buffer).substr(start, nl - start));
      reply.push_back('\n');
      if (!SendAll(fd, reply).ok()) {
        failed = true;
        break;
      }
    }
    if (failed) break;
    buffer.erase(0, start);
    if (buffer.size() > kMaxLineBytes + 1 && !discarding) {
      // Answer the overlong line now and drop the rest of it.
      std::string reply = EncodeMessage(ErrorFromStatus(
          absl::InvalidArgumentError(
              absl::StrCat("line exceeds ", kMaxLineBytes, " bytes"))));
      reply.push_back('\n');
      if (!SendAll(fd, reply).ok()) break;
      discarding = true;
    }
    if (discarding) buffer.clear();
  }
  std::lock_guard<std::mutex> lock(mu_);
  std::erase(client_fds_, fd);
  ::close(fd);
}

absl::StatusOr<NrmClient> NrmClient::Connect(const std::string& host,
                                             int port) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  hints.ai_flags = AI_NUMERICSERV;
  addrinfo* res = nullptr;
  const std::string port_text = std::to_string(port);
  if (int rc = ::getaddrinfo(host.c_str(), port_text.c_str(), &hints, &res);
      rc != 0) {
    return absl::InvalidArgumentError(
        absl::StrCat("cannot resolve ", host, ": ", ::gai_strerror(rc)));
  }
  int fd = -1;
  std::string error = "no usable address";
  for (addrinfo* ai = res; ai != nullptr; ai = ai->ai_next) {
    fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
    if (fd < 0) continue;
    if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) break;
    error = std::strerror(errno);
    ::close(fd);
    fd = -1;
  }
  ::freeaddrinfo(res);
  if (fd < 0) {
    return absl::UnavailableError(
        absl::StrCat("cannot connect to ", host, ":", port, ": ", error));
  }
  return NrmClient(fd);
}

NrmClient::NrmClient(NrmClient&& other) noexcept
    : fd_(std::exchange(other.fd_, -1)), buffer_(std::move(other.buffer_)) {}

NrmClient& NrmClient::operator=(NrmClient&& other) noexcept {
  if (this != &other) {
    if (fd_ >= 0) ::close(fd_);
    fd_ = std::exchange(other.fd_, -1);
    buffer_ = std::move(other.buffer_);
  }
  return *this;
}

NrmClient::~NrmClient() {
  if (fd_ >= 0) ::close(fd_);
}

absl::StatusOr<std::string> NrmClient::CallRaw(std::string_view line) {
  if (fd_ < 0) return absl::FailedPreconditionError("client is closed");
  std::string out(line);
  out.push_back('\n');
  if (absl::Status s = SendAll(fd_, out); !s.ok()) return s;
  char chunk[4096];
  while (true) {
    if (const size_t nl = buffer_.find('\n'); nl != std::string::npos) {
      std::string reply = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      return reply;
    }
    const ssize_t n = ::recv(fd_, chunk, sizeof(chunk), 0);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) return absl::UnavailableError("connection closed by server");
    buffer_.append(chunk, static_cast<size_t>(n));
  }
}

absl::StatusOr<Message> NrmClient::Call(const Message& msg) {
  absl::StatusOr<std::string> reply = CallRaw(EncodeMessage(msg));
  if (!reply.ok()) return reply.status();
  return ParseMessage(*reply);
}

}  // namespace sandqos
