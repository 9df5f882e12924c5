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

#include "poietic/net.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <openssl/evp.h>
#include <openssl/sha.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <chrono>
#include <map>
#include <system_error>

#include "poietic/rng.hpp"

namespace poietic::net {

namespace {

using Clock = std::chrono::steady_clock;

[[noreturn]] void fail(const std::string& what) {
  throw std::system_error(errno, std::generic_category(), what);
}

std::int64_t wall_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

void set_nonblocking(int fd) {
  const int flags = fcntl(fd, F_GETFL, 0);
  if (flags < 0 || fcntl(fd, F_SETFL, flags | O_NONBLOCK) < 0) fail("fcntl");
}

struct AddrInfo {
  addrinfo* list = nullptr;
  AddrInfo(const std::string& host, std::uint16_t port, bool passive) {
    addrinfo hints{};
    hints.ai_family = AF_INET;
    hints.ai_socktype = SOCK_STREAM;
    if (passive) hints.ai_flags = AI_PASSIVE;
    const std::string service = std::to_string(port);
    const int rc = getaddrinfo(host.empty() ? nullptr : host.c_str(), service.c_str(), &hints, &list);
    if (rc != 0) throw std::system_error(EINVAL, std::generic_category(), host + ": " + gai_strerror(rc));
  }
  ~AddrInfo() {
    if (list) freeaddrinfo(list);
  }
};

int listen_on(const std::string& host, std::uint16_t port, std::uint16_t& bound) {
  AddrInfo ai(host, port, true);
  const int fd = socket(ai.list->ai_family, ai.list->ai_socktype, ai.list->ai_protocol);
  if (fd < 0) fail("socket");
  const int one = 1;
  setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  if (bind(fd, ai.list->ai_addr, ai.list->ai_addrlen) < 0 || listen(fd, 64) < 0) {
    const int err = errno;
    close(fd);
    errno = err;
    fail("cannot listen on " + host + ":" + std::to_string(port));
  }
  set_nonblocking(fd);
  sockaddr_in addr{};
  socklen_t len = sizeof addr;
  getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
  bound = ntohs(addr.sin_port);
  return fd;
}

enum class Mode { kDetect, kLines, kHandshake, kWebSocket };

struct Conn {
  int fd = -1;
  Mode mode = Mode::kDetect;
  std::string in;
  std::string out;
  std::string fragments;
  bool closing = false;
  bool dead = false;
};

std::string ws_frame(std::uint8_t opcode, std::string_view payload) {
  std::string f;
  f.push_back(static_cast<char>(0x80 | opcode));
  const std::size_t n = payload.size();
  if (n < 126) {
    f.push_back(static_cast<char>(n));
  } else if (n <= 0xffff) {
    f.push_back(static_cast<char>(126));
    f.push_back(static_cast<char>(n >> 8));
    f.push_back(static_cast<char>(n & 0xff));
  } else {
    f.push_back(static_cast<char>(127));
    for (int shift = 56; shift >= 0; shift -= 8) f.push_back(static_cast<char>((n >> shift) & 0xff));
  }
  f.append(payload);
  return f;
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r");
  const auto last = s.find_last_not_of(" \t\r");
  return first == std::string::npos ? "" : s.substr(first, last - first + 1);
}

class Server {
 public:
  Server(SessionDriver& driver, const ServeOptions& options) : driver_(driver), options_(options) {}

  Tick run() {
    std::uint16_t bound = 0;
    listener_ = listen_on(options_.host, options_.port, bound);
    if (options_.on_listening) options_.on_listening(bound);
    const auto period = std::chrono::milliseconds(driver_.config().tick_ms);
    auto next = Clock::now() + period;
    Tick pumped = 0;
    while (!(options_.stop && options_.stop->load()) &&
           !(options_.max_ticks && pumped >= *options_.max_ticks)) {
      poll_once(std::max<long>(
          0, std::chrono::duration_cast<std::chrono::milliseconds>(next - Clock::now()).count()));
      if (Clock::now() >= next) {
        driver_.pump_tick(wall_ms());
        ++pumped;
        route();
        next += period;
        if (next < Clock::now()) next = Clock::now() + period;
      }
      flush();
      reap();
    }
    drain_and_close();
    return pumped;
  }

 private:
  void poll_once(long timeout_ms) {
    std::vector<pollfd> fds;
    std::vector<ConnectionId> ids;
    fds.push_back(pollfd{listener_, POLLIN, 0});
    for (const auto& [id, c] : conns_) {
      fds.push_back(pollfd{c.fd, static_cast<short>(POLLIN | (c.out.empty() ? 0 : POLLOUT)), 0});
      ids.push_back(id);
    }
    const int rc = ::poll(fds.data(), fds.size(), static_cast<int>(timeout_ms));
    if (rc < 0) {
      if (errno == EINTR) return;
      fail("poll");
    }
    if (fds[0].revents & POLLIN) accept_all();
    for (std::size_t i = 1; i < fds.size(); ++i) {
      if (fds[i].revents & (POLLIN | POLLHUP | POLLERR)) read_from(ids[i - 1]);
    }
    route();
  }

  void accept_all() {
    for (;;) {
      const int fd = accept(listener_, nullptr, nullptr);
      if (fd < 0) return;
      set_nonblocking(fd);
      const int one = 1;
      setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
      const ConnectionId id = ++last_id_;
      conns_[id].fd = fd;
      driver_.connect(id);
    }
  }

  void read_from(ConnectionId id) {
    Conn& c = conns_.at(id);
    char buf[65536];
    for (;;) {
      const ssize_t n = recv(c.fd, buf, sizeof buf, 0);
      if (n > 0) {
        c.in.append(buf, static_cast<std::size_t>(n));
        continue;
      }
      if (n == 0 || (errno != EAGAIN && errno != EWOULDBLOCK && errno != EINTR)) c.dead = true;
      if (n < 0 && errno == EINTR) continue;
      break;
    }
    process(id, c);
  }

  void process(ConnectionId id, Conn& c) {
    if (c.mode == Mode::kDetect) {
      if (c.in.size() >= 4 && c.in.compare(0, 4, "GET ") == 0) {
        c.mode = Mode::kHandshake;
      } else if (c.in.size() >= 4 || c.in.find('\n') != std::string::npos) {
        c.mode = Mode::kLines;
      } else {
        return;
      }
    }
    if (c.mode == Mode::kHandshake) handshake(c);
    if (c.mode == Mode::kLines) {
      std::size_t start = 0;
      for (std::size_t nl; (nl = c.in.find('\n', start)) != std::string::npos; start = nl + 1) {
        driver_.receive(id, std::string_view(c.in).substr(start, nl - start));
      }
      c.in.erase(0, start);
      if (c.in.size() > wire::kMaxLineBytes) {
        driver_.receive(id, c.in);  // answered with a malformed ERROR
        c.in.clear();
        c.closing = true;
      }
    }
    if (c.mode == Mode::kWebSocket) read_frames(id, c);
  }

  void handshake(Conn& c) {
    const auto end = c.in.find("\r\n\r\n");
    if (end == std::string::npos) {
      if (c.in.size() > 16384) c.dead = true;
      return;
    }
    std::string key;
    std::size_t pos = c.in.find("\r\n") + 2;
    while (pos < end) {
      const auto eol = c.in.find("\r\n", pos);
      const std::string line = c.in.substr(pos, eol - pos);
      const auto colon = line.find(':');
      if (colon != std::string::npos && lower(trim(line.substr(0, colon))) == "sec-websocket-key") {
        key = trim(line.substr(colon + 1));
      }
      pos = eol + 2;
    }
    c.in.erase(0, end + 4);
    if (key.empty()) {
      c.out += "HTTP/1.1 400 Bad Request\r\nContent-Length: 0\r\nConnection: close\r\n\r\n";
      c.closing = true;
      c.mode = Mode::kLines;
      return;
    }
    c.out +=
        "HTTP/1.1 101 Switching Protocols\r\nUpgrade: websocket\r\nConnection: Upgrade\r\n"
        "Sec-WebSocket-Accept: " +
        websocket_accept(key) + "\r\n\r\n";
    c.mode = Mode::kWebSocket;
  }

  void read_frames(ConnectionId id, Conn& c) {
    for (;;) {
      if (c.in.size() < 2) return;
      const auto b0 = static_cast<std::uint8_t>(c.in[0]);
      const auto b1 = static_cast<std::uint8_t>(c.in[1]);
      const bool fin = b0 & 0x80;
      const std::uint8_t opcode = b0 & 0x0f;
      std::uint64_t len = b1 & 0x7f;
      std::size_t pos = 2;
      if (len == 126) {
        if (c.in.size() < 4) return;
        len = (std::uint64_t{static_cast<std::uint8_t>(c.in[2])} << 8) | static_cast<std::uint8_t>(c.in[3]);
        pos = 4;
      } else if (len == 127) {
        if (c.in.size() < 10) return;
        len = 0;
        for (int i = 2; i < 10; ++i) len = (len << 8) | static_cast<std::uint8_t>(c.in[i]);
        pos = 10;
      }
      if (!(b1 & 0x80) || len > wire::kMaxLineBytes) {  // clients must mask
        c.out += ws_frame(0x8, "");
        c.closing = true;
        c.in.clear();
        return;
      }
      if (c.in.size() < pos + 4 + len) return;
      std::string payload = c.in.substr(pos + 4, len);
      for (std::size_t i = 0; i < payload.size(); ++i) payload[i] ^= c.in[pos + i % 4];
      c.in.erase(0, pos + 4 + len);
      switch (opcode) {
        case 0x0:
          c.fragments += payload;
          if (fin) driver_.receive(id, std::exchange(c.fragments, {}));
          break;
        case 0x1:
        case 0x2:
          if (fin) {
            driver_.receive(id, payload);
          } else {
            c.fragments = std::move(payload);
          }
          break;
        case 0x8:
          c.out += ws_frame(0x8, "");
          c.closing = true;
          return;
        case 0x9:
          c.out += ws_frame(0xA, payload);
          break;
        default:
          break;
      }
    }
  }

  void route() {
    for (Outbound& o : driver_.take_outbound()) {
      auto it = conns_.find(o.to);
      if (it == conns_.end() || it->second.dead) continue;
      Conn& c = it->second;
      if (c.mode == Mode::kWebSocket) {
        std::string_view text(o.line);
        if (!text.empty() && text.back() == '\n') text.remove_suffix(1);
        c.out += ws_frame(0x1, text);
      } else {
        c.out += o.line;
      }
      if (o.close_after) c.closing = true;
      if (c.out.size() > options_.max_backlog) c.dead = true;
    }
  }

  void flush() {
    for (auto& [id, c] : conns_) {
      while (!c.out.empty() && !c.dead) {
        const ssize_t n = ::send(c.fd, c.out.data(), c.out.size(), MSG_NOSIGNAL);
        if (n > 0) {
          c.out.erase(0, static_cast<std::size_t>(n));
        } else if (n < 0 && errno == EINTR) {
          continue;
        } else {
          if (n < 0 && errno != EAGAIN && errno != EWOULDBLOCK) c.dead = true;
          break;
        }
      }
      if (c.closing && c.out.empty()) c.dead = true;
    }
  }

  void reap() {
    for (auto it = conns_.begin(); it != conns_.end();) {
      if (it->second.dead) {
        driver_.disconnect(it->first);
        close(it->second.fd);
        it = conns_.erase(it);
      } else {
        ++it;
      }
    }
  }

  void drain_and_close() {
    const auto deadline = Clock::now() + std::chrono::milliseconds(500);
    for (;;) {
      flush();
      const bool pending = std::any_of(conns_.begin(), conns_.end(), [](const auto& kv) {
        return !kv.second.dead && !kv.second.out.empty();
      });
      if (!pending || Clock::now() > deadline) break;
      std::vector<pollfd> fds;
      for (const auto& [id, c] : conns_) {
        if (!c.out.empty()) fds.push_back(pollfd{c.fd, POLLOUT, 0});
      }
      ::poll(fds.data(), fds.size(), 50);
    }
    for (auto& [id, c] : conns_) {
      driver_.disconnect(id);
      close(c.fd);
    }
    conns_.clear();
    close(listener_);
  }

  SessionDriver& driver_;
  const ServeOptions& options_;
  int listener_ = -1;
  ConnectionId last_id_ = 0;
  std::map<ConnectionId, Conn> conns_;
};

}  // namespace

Tick serve(SessionDriver& driver, const ServeOptions& options) { return Server(driver, options).run(); }

std::string websocket_accept(const std::string& key) {
  const std::string text = key + "258EAFA5-E914-47DA-95CA-C5AB0DC85B11";
  unsigned char digest[SHA_DIGEST_LENGTH];
  SHA1(reinterpret_cast<const unsigned char*>(text.data()), text.size(), digest);
  unsigned char out[4 * ((SHA_DIGEST_LENGTH + 2) / 3) + 1];
  const int n = EVP_EncodeBlock(out, digest, SHA_DIGEST_LENGTH);
  return std::string(reinterpret_cast<char*>(out), static_cast<std::size_t>(n));
}

LineClient::LineClient(const std::string& host, std::uint16_t port) {
  AddrInfo ai(host, port, false);
  fd_ = socket(ai.list->ai_family, ai.list->ai_socktype, ai.list->ai_protocol);
  if (fd_ < 0) fail("socket");
  if (connect(fd_, ai.list->ai_addr, ai.list->ai_addrlen) < 0) {
    const int err = errno;
    close(fd_);
    errno = err;
    fail("cannot connect to " + host + ":" + std::to_string(port));
  }
  const int one = 1;
  setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
}

LineClient::~LineClient() {
  if (fd_ >= 0) close(fd_);
}

void LineClient::send(const std::string& line) {
  std::size_t done = 0;
  while (done < line.size()) {
    const ssize_t n = ::send(fd_, line.data() + done, line.size() - done, MSG_NOSIGNAL);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) {
      closed_ = true;
      return;
    }
    done += static_cast<std::size_t>(n);
  }
}

std::optional<std::string> LineClient::buffered_line() {
  const auto nl = buffer_.find('\n');
  if (nl == std::string::npos) return std::nullopt;
  std::string line = buffer_.substr(0, nl);
  buffer_.erase(0, nl + 1);
  return line;
}

bool LineClient::pump() {
  char buf[65536];
  for (;;) {
    const ssize_t n = recv(fd_, buf, sizeof buf, MSG_DONTWAIT);
    if (n > 0) {
      buffer_.append(buf, static_cast<std::size_t>(n));
      continue;
    }
    if (n < 0 && errno == EINTR) continue;
    if (n == 0 || (errno != EAGAIN && errno != EWOULDBLOCK)) closed_ = true;
    return !closed_;
  }
}

std::optional<std::string> LineClient::read_line(int timeout_ms) {
  const auto deadline = Clock::now() + std::chrono::milliseconds(timeout_ms);
  for (;;) {
    if (auto line = buffered_line()) return line;
    if (closed_) return std::nullopt;
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now()).count();
    if (left <= 0) return std::nullopt;
    pollfd p{fd_, POLLIN, 0};
    if (::poll(&p, 1, static_cast<int>(left)) > 0) pump();
  }
}

GhostStats run_ghosts(const GhostOptions& options) {
  struct Ghost {
    AgentId id;
    std::unique_ptr<LineClient> client;
    wire::ClientView view;
    Rng rng;
    std::size_t frames = 0;
    bool leaving = false;
    bool done = false;
  };
  GhostStats stats;
  std::vector<Ghost> ghosts;
  for (std::uint32_t i = 1; i <= options.count; ++i) {
    const AgentId id(options.prefix + "-" + std::to_string(i));
    Ghost g{id, std::make_unique<LineClient>(options.host, options.port), wire::ClientView(options.code),
            Rng(derive_seed(options.seed, "ghost:" + id.str()))};
    g.client->send(g.view.encode(g.view.join_request(id, options.role)));
    ghosts.push_back(std::move(g));
  }

  auto handle = [&](Ghost& g, const std::string& line) {
    wire::Message m;
    try {
      m = g.view.decode(line);
    } catch (const wire::WireError& e) {
      stats.errors.push_back(g.id.str() + ": undecodable message: " + e.what());
      return;
    }
    const bool was_joined = g.view.joined();
    g.view.receive(m);
    if (std::holds_alternative<wire::JoinAck>(m.body)) ++stats.joined;
    if (const auto* err = std::get_if<wire::ErrorMsg>(&m.body)) {
      stats.errors.push_back(g.id.str() + ": " + err->reason + ": " + err->detail);
      if (!was_joined) g.done = true;
    }
    if (std::holds_alternative<wire::LeaveAck>(m.body)) g.done = true;
    const bool frame =
        std::holds_alternative<wire::FrameMsg>(m.body) || std::holds_alternative<wire::DeltaMsg>(m.body);
    if (!frame || !g.view.joined() || g.leaving || !g.view.frame()) return;
    ++g.frames;
    const CellGeometry& geo = g.view.geometry();
    for (const Event& e : agent_policy_step(options.policy, *g.view.frame(), g.id, g.view.position(),
                                            options.quality, g.rng, geo, g.view.last_tick(), 0)) {
      g.client->send(g.view.encode(g.view.paint(e.payload)));
      ++stats.events_sent;
    }
    if (options.frames && g.frames >= *options.frames) {
      g.client->send(g.view.encode(g.view.leave_request()));
      g.leaving = true;
    }
  };

  while (!(options.stop && options.stop->load())) {
    std::vector<pollfd> fds;
    std::vector<Ghost*> owners;
    for (Ghost& g : ghosts) {
      if (g.done || g.client->closed()) continue;
      fds.push_back(pollfd{g.client->fd(), POLLIN, 0});
      owners.push_back(&g);
    }
    if (fds.empty()) break;
    if (::poll(fds.data(), fds.size(), 200) < 0 && errno != EINTR) fail("poll");
    for (std::size_t i = 0; i < fds.size(); ++i) {
      if (!(fds[i].revents & (POLLIN | POLLHUP | POLLERR))) continue;
      Ghost& g = *owners[i];
      g.client->pump();
      while (auto line = g.client->buffered_line()) handle(g, *line);
    }
  }
  for (const Ghost& g : ghosts) {
    stats.confirmed += g.view.confirmed();
    stats.still_pending += g.view.pending().size();
    if (g.view.badge() == wire::ClientView::Badge::kAlienated) ++stats.alienated;
  }
  return stats;
}

}  // namespace poietic::net
