// Copyright 2026 The Poietic Authors
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

// POSIX TCP transport for live sessions. A connection speaks newline
// delimited messages; a connection that opens with an HTTP GET is upgraded
// to WebSocket and then carries one message per text frame.

#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>

#include "poietic/policy.hpp"
#include "poietic/session_service.hpp"

namespace poietic::net {

struct ServeOptions {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;  // 0: any free port
  /// Stop after this many ticks; nullopt runs until `stop` is set.
  std::optional<Tick> max_ticks;
  /// Outbound bytes a slow connection may have queued before it is dropped.
  std::size_t max_backlog = std::size_t{16} << 20;
  /// Called once with the bound port before the first tick.
  std::function<void(std::uint16_t)> on_listening;
  const std::atomic<bool>* stop = nullptr;
};

/// Runs `driver` at its configured tick rate. Returns the ticks pumped.
/// Throws std::system_error when the listening socket cannot be set up.
Tick serve(SessionDriver& driver, const ServeOptions& options);

/// Blocking newline-delimited client, used by ghosts and tests.
class LineClient {
 public:
  LineClient(const std::string& host, std::uint16_t port);
  ~LineClient();
  LineClient(const LineClient&) = delete;
  LineClient& operator=(const LineClient&) = delete;

  void send(const std::string& line);
  /// Next line without its newline; nullopt on timeout or when the peer closed.
  std::optional<std::string> read_line(int timeout_ms);
  bool closed() const { return closed_; }
  int fd() const { return fd_; }
  /// Lines already buffered, split off the socket without blocking.
  std::optional<std::string> buffered_line();
  /// Reads whatever is available without blocking. False once closed.
  bool pump();

 private:
  int fd_ = -1;
  std::string buffer_;
  bool closed_ = false;
};

struct GhostOptions {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;
  VanishingCode code;
  std::uint32_t count = 1;
  AgentPolicy policy = RandomPainter{};
  double quality = 0.5;
  Role role = Role::kOrdinary;
  std::string prefix = "ghost";
  std::uint64_t seed = 0;
  /// Leave after this many frames per ghost; nullopt runs until `stop`.
  std::optional<std::size_t> frames;
  const std::atomic<bool>* stop = nullptr;
};

struct GhostStats {
  std::uint32_t joined = 0;
  std::size_t events_sent = 0;
  std::size_t confirmed = 0;
  std::size_t still_pending = 0;
  std::uint32_t alienated = 0;  // ghosts whose last badge said so
  std::vector<std::string> errors;
};

/// Attaches `count` scripted agents named <prefix>-1.. to a live session.
/// Each ghost acts once per frame it receives.
GhostStats run_ghosts(const GhostOptions& options);

/// Sec-WebSocket-Accept value for a client key.
std::string websocket_accept(const std::string& key);

}  // namespace poietic::net
