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

#pragma once

#include <atomic>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "ppelm/transport.hpp"

namespace ppelm {

struct HostPort {
  std::string host;
  std::uint16_t port = 0;

  std::string str() const { return host + ":" + std::to_string(port); }

  // "host:port"; throws ConfigError when malformed.
  static HostPort parse(const std::string& text);

  friend bool operator==(const HostPort&, const HostPort&) = default;
};

// TCP endpoint. A listener thread accepts connections; each connection gets
// a reader thread that decodes frames into the mailbox. Outbound frames use
// one persistent connection per peer, so per-pair ordering follows from TCP
// stream ordering. A connection that closes mid-frame delivers nothing.
class TcpTransport : public Transport {
 public:
  // Binds immediately; port 0 picks an ephemeral port.
  TcpTransport(PartyId self, const HostPort& listen);
  ~TcpTransport() override;

  TcpTransport(const TcpTransport&) = delete;
  TcpTransport& operator=(const TcpTransport&) = delete;

  HostPort local_address() const { return bound_; }

  void set_peer(PartyId id, const HostPort& address);
  std::map<PartyId, HostPort> peers() const;

  // Address used for `id` by frames of one run only, taking precedence over
  // set_peer. Concurrent runs may place different endpoints at the same id
  // (each run's master is id k).
  void set_run_peer(const RunId& run, PartyId id, const HostPort& address);
  void clear_run(const RunId& run);

  // How long send() keeps retrying a refused connection.
  void set_connect_timeout(std::chrono::milliseconds t) { connect_timeout_ = t; }

  PartyId self() const override { return self_; }
  void send(PartyId to, const Frame& frame) override;
  Frame recv(const RunId& run, std::chrono::milliseconds timeout) override;
  Frame recv_setup(std::chrono::milliseconds timeout) override;

  // Number of inbound connections dropped because of a malformed frame.
  std::size_t malformed_count() const { return malformed_.load(); }

 private:
  struct Outbound {
    std::mutex mu;
    int fd = -1;
  };

  void accept_loop();
  void read_loop(int fd);
  int connect_to(const HostPort& address);

  PartyId self_;
  HostPort bound_;
  int listen_fd_ = -1;
  std::atomic<bool> stopping_{false};
  std::atomic<std::size_t> malformed_{0};
  std::chrono::milliseconds connect_timeout_{10'000};

  Mailbox inbox_;

  mutable std::mutex peers_mu_;
  std::map<PartyId, HostPort> peers_;
  std::map<std::pair<RunId, PartyId>, HostPort> run_peers_;
  // One connection per destination address.
  std::map<std::string, std::unique_ptr<Outbound>> outbound_;

  std::mutex readers_mu_;
  std::vector<std::thread> readers_;
  std::vector<int> reader_fds_;
  std::thread acceptor_;
};

}  // namespace ppelm
