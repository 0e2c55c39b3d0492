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

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>

#include "ppelm/frame.hpp"

namespace ppelm {

using PartyId = std::uint32_t;

inline constexpr std::chrono::milliseconds kDefaultRecvTimeout{30'000};

// One party's view of the network. Delivery is exactly-once and in order per
// (sender, receiver) pair. Receiving demultiplexes on run_id so several runs
// can share an endpoint.
class Transport {
 public:
  virtual ~Transport() = default;

  virtual PartyId self() const = 0;

  // Returns once the frame has been handed to the receiver's endpoint.
  // Throws ConnectionLost if the peer is unknown or unreachable.
  virtual void send(PartyId to, const Frame& frame) = 0;

  // Next frame for `run`. Throws Timeout after `timeout`.
  virtual Frame recv(const RunId& run, std::chrono::milliseconds timeout) = 0;

  // Next SETUP frame of any run.
  virtual Frame recv_setup(std::chrono::milliseconds timeout) = 0;
};

// Thread-safe inbox shared by both backends.
class Mailbox {
 public:
  void push(Frame frame);

  std::optional<Frame> try_pop(const RunId& run);
  Frame pop(const RunId& run, std::chrono::milliseconds timeout);
  Frame pop_setup(std::chrono::milliseconds timeout);

  bool empty() const;

 private:
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::deque<Frame> frames_;
};

// In-process network: one mailbox per party id. Endpoints are cheap handles
// and remain valid while the network lives.
class InProcNetwork {
 public:
  explicit InProcNetwork(std::size_t endpoints);

  std::unique_ptr<Transport> endpoint(PartyId id);
  Mailbox& mailbox(PartyId id);
  std::size_t size() const { return boxes_.size(); }

 private:
  std::vector<std::unique_ptr<Mailbox>> boxes_;
};

// Observer invoked with the encoded bytes of every frame sent through a
// TappedTransport.
using FrameTap = std::function<void(PartyId from, PartyId to, const Frame& frame,
                                    std::span<const std::uint8_t> wire)>;

class TappedTransport : public Transport {
 public:
  TappedTransport(std::unique_ptr<Transport> inner, FrameTap tap)
      : owned_(std::move(inner)), inner_(owned_.get()), tap_(std::move(tap)) {}
  // Non-owning: `inner` must outlive the tap.
  TappedTransport(Transport& inner, FrameTap tap)
      : inner_(&inner), tap_(std::move(tap)) {}

  PartyId self() const override { return inner_->self(); }
  void send(PartyId to, const Frame& frame) override;
  Frame recv(const RunId& run, std::chrono::milliseconds timeout) override {
    return inner_->recv(run, timeout);
  }
  Frame recv_setup(std::chrono::milliseconds timeout) override {
    return inner_->recv_setup(timeout);
  }

 private:
  std::unique_ptr<Transport> owned_;
  Transport* inner_;
  FrameTap tap_;
};

}  // namespace ppelm
