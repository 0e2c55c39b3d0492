/*
 * Copyright 2026 The ppelm Authors
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "ppelm/tcp_transport.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <charconv>
#include <cstring>

namespace ppelm {
namespace {

constexpr int kPollTickMs = 100;

std::string errno_text() { return std::strerror(errno); }

sockaddr_in resolve(const HostPort& address) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  const int rc = ::getaddrinfo(address.host.c_str(), nullptr, &hints, &res);
  if (rc != 0 || res == nullptr) {
    throw ConnectionLost("cannot resolve " + address.host + ": " +
                         ::gai_strerror(rc));
  }
  sockaddr_in out{};
  std::memcpy(&out, res->ai_addr, sizeof(out));
  ::freeaddrinfo(res);
  out.sin_port = htons(address.port);
  return out;
}

// Waits until fd is readable or the stop flag is raised. False on stop.
bool wait_readable(int fd, const std::atomic<bool>& stopping) {
  pollfd p{fd, POLLIN, 0};
  while (!stopping.load()) {
    const int rc = ::poll(&p, 1, kPollTickMs);
    if (rc > 0) return true;
    if (rc < 0 && errno != EINTR) return false;
  }
  return false;
}

enum class ReadStatus { kOk, kEof, kError };

ReadStatus read_exact(int fd, std::uint8_t* buf, std::size_t n,
                      const std::atomic<bool>& stopping) {
  std::size_t got = 0;
  while (got < n) {
    if (!wait_readable(fd, stopping)) return ReadStatus::kError;
    const ssize_t rc = ::recv(fd, buf + got, n - got, 0);
    if (rc == 0) return got == 0 ? ReadStatus::kEof : ReadStatus::kError;
    if (rc < 0) {
      if (errno == EINTR || errno == EAGAIN) continue;
      return ReadStatus::kError;
    }
    got += static_cast<std::size_t>(rc);
  }
  return ReadStatus::kOk;
}

bool write_all(int fd, std::span<const std::uint8_t> bytes) {
  std::size_t sent = 0;
  while (sent < bytes.size()) {
    const ssize_t rc =
        ::send(fd, bytes.data() + sent, bytes.size() - sent, MSG_NOSIGNAL);
    if (rc < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    sent += static_cast<std::size_t>(rc);
  }
  return true;
}

}  // namespace

HostPort HostPort::parse(const std::string& text) {
  const auto colon = text.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == text.size()) {
    throw ConfigError("expected host:port, got '" + text + "'");
  }
  unsigned port = 0;
  const char* first = text.data() + colon + 1;
  const char* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, port);
  if (ec != std::errc() || ptr != last || port > 65535) {
    throw ConfigError("bad port in '" + text + "'");
  }
  return {text.substr(0, colon), static_cast<std::uint16_t>(port)};
}

TcpTransport::TcpTransport(PartyId self, const HostPort& listen) : self_(self) {
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) throw ConnectionLost("socket(): " + errno_text());
  const int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in addr = resolve(listen);
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) < 0 ||
      ::listen(listen_fd_, 64) < 0) {
    const std::string err = errno_text();
    ::close(listen_fd_);
    throw ConnectionLost("cannot listen on " + listen.str() + ": " + err);
  }
  socklen_t len = sizeof(addr);
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  bound_ = {listen.host, ntohs(addr.sin_port)};
  acceptor_ = std::thread([this] { accept_loop(); });
}

TcpTransport::~TcpTransport() {
  stopping_ = true;
  if (acceptor_.joinable()) acceptor_.join();
  ::close(listen_fd_);
  {
    std::lock_guard lock(readers_mu_);
    for (int fd : reader_fds_) ::shutdown(fd, SHUT_RDWR);
  }
  for (auto& t : readers_) {
    if (t.joinable()) t.join();
  }
  for (int fd : reader_fds_) ::close(fd);
  for (auto& [id, out] : outbound_) {
    if (out->fd >= 0) ::close(out->fd);
  }
}

void TcpTransport::set_peer(PartyId id, const HostPort& address) {
  std::lock_guard lock(peers_mu_);
  peers_[id] = address;
}

void TcpTransport::set_run_peer(const RunId& run, PartyId id, const HostPort& address) {
  std::lock_guard lock(peers_mu_);
  run_peers_[{run, id}] = address;
}

void TcpTransport::clear_run(const RunId& run) {
  std::lock_guard lock(peers_mu_);
  std::erase_if(run_peers_, [&run](const auto& entry) { return entry.first.first == run; });
}

std::map<PartyId, HostPort> TcpTransport::peers() const {
  std::lock_guard lock(peers_mu_);
  return peers_;
}

void TcpTransport::accept_loop() {
  while (wait_readable(listen_fd_, stopping_)) {
    const int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) continue;
    const int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
    std::lock_guard lock(readers_mu_);
    reader_fds_.push_back(fd);
    readers_.emplace_back([this, fd] { read_loop(fd); });
  }
}

void TcpTransport::read_loop(int fd) {
  std::vector<std::uint8_t> buf(kFrameHeaderSize);
  for (;;) {
    buf.resize(kFrameHeaderSize);
    const auto head = read_exact(fd, buf.data(), kFrameHeaderSize, stopping_);
    if (head == ReadStatus::kEof) return;
    if (head == ReadStatus::kError) {
      if (!stopping_) ++malformed_;
      return;
    }
    std::uint32_t len = 0;
    try {
      len = parse_frame_header(buf);
    } catch (const MalformedFrame&) {
      ++malformed_;
      ::shutdown(fd, SHUT_RDWR);
      return;
    }
    buf.resize(kFrameHeaderSize + len);
    if (len > 0 && read_exact(fd, buf.data() + kFrameHeaderSize, len,
                              stopping_) != ReadStatus::kOk) {
      if (!stopping_) ++malformed_;
      return;
    }
    inbox_.push(decode_frame(buf));
  }
}

int TcpTransport::connect_to(const HostPort& address) {
  const sockaddr_in addr = resolve(address);
  const auto deadline = std::chrono::steady_clock::now() + connect_timeout_;
  for (;;) {
    const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0) throw ConnectionLost("socket(): " + errno_text());
    if (::connect(fd, reinterpret_cast<const sockaddr*>(&addr), sizeof(addr)) == 0) {
      const int one = 1;
      ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
      return fd;
    }
    const std::string err = errno_text();
    ::close(fd);
    if (std::chrono::steady_clock::now() >= deadline) {
      throw ConnectionLost("cannot connect to " + address.str() + ": " + err);
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
  }
}

void TcpTransport::send(PartyId to, const Frame& frame) {
  Outbound* out = nullptr;
  HostPort address;
  {
    std::lock_guard lock(peers_mu_);
    if (auto it = run_peers_.find({frame.run_id, to}); it != run_peers_.end()) {
      address = it->second;
    } else if (auto p = peers_.find(to); p != peers_.end()) {
      address = p->second;
    } else {
      throw ConnectionLost("no address for party " + std::to_string(to));
    }
    auto& slot = outbound_[address.str()];
    if (!slot) slot = std::make_unique<Outbound>();
    out = slot.get();
  }
  const auto wire = encode_frame(frame);
  std::lock_guard lock(out->mu);
  for (int attempt = 0; attempt < 2; ++attempt) {
    if (out->fd < 0) out->fd = connect_to(address);
    if (write_all(out->fd, wire)) return;
    // A partially written frame is discarded by the receiver when the
    // connection drops, so resending on a fresh connection cannot duplicate.
    ::close(out->fd);
    out->fd = -1;
  }
  throw ConnectionLost("write to party " + std::to_string(to) + " at " +
                       address.str() + " failed");
}

Frame TcpTransport::recv(const RunId& run, std::chrono::milliseconds timeout) {
  return inbox_.pop(run, timeout);
}

Frame TcpTransport::recv_setup(std::chrono::milliseconds timeout) {
  return inbox_.pop_setup(timeout);
}

}  // namespace ppelm
