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

#include "ppelm/transport.hpp"

#include <algorithm>

namespace ppelm {

void Mailbox::push(Frame frame) {
  {
    std::lock_guard lock(mu_);
    frames_.push_back(std::move(frame));
  }
  cv_.notify_all();
}

std::optional<Frame> Mailbox::try_pop(const RunId& run) {
  std::lock_guard lock(mu_);
  auto it = std::find_if(frames_.begin(), frames_.end(),
                         [&](const Frame& f) { return f.run_id == run; });
  if (it == frames_.end()) return std::nullopt;
  Frame out = std::move(*it);
  frames_.erase(it);
  return out;
}

Frame Mailbox::pop(const RunId& run, std::chrono::milliseconds timeout) {
  std::unique_lock lock(mu_);
  auto match = [&](const Frame& f) { return f.run_id == run; };
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  for (;;) {
    auto it = std::find_if(frames_.begin(), frames_.end(), match);
    if (it != frames_.end()) {
      Frame out = std::move(*it);
      frames_.erase(it);
      return out;
    }
    if (cv_.wait_until(lock, deadline) == std::cv_status::timeout) {
      if (std::none_of(frames_.begin(), frames_.end(), match)) {
        throw Timeout("no frame for run " + to_hex(run) + " within " +
                      std::to_string(timeout.count()) + " ms");
      }
    }
  }
}

Frame Mailbox::pop_setup(std::chrono::milliseconds timeout) {
  std::unique_lock lock(mu_);
  auto match = [](const Frame& f) { return f.type == MsgType::kSetup; };
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  for (;;) {
    auto it = std::find_if(frames_.begin(), frames_.end(), match);
    if (it != frames_.end()) {
      Frame out = std::move(*it);
      frames_.erase(it);
      return out;
    }
    if (cv_.wait_until(lock, deadline) == std::cv_status::timeout &&
        std::none_of(frames_.begin(), frames_.end(), match)) {
      throw Timeout("no SETUP frame within " +
                    std::to_string(timeout.count()) + " ms");
    }
  }
}

bool Mailbox::empty() const {
  std::lock_guard lock(mu_);
  return frames_.empty();
}

namespace {

class InProcEndpoint : public Transport {
 public:
  InProcEndpoint(InProcNetwork& net, PartyId id) : net_(net), id_(id) {}

  PartyId self() const override { return id_; }

  void send(PartyId to, const Frame& frame) override {
    if (to >= net_.size()) {
      throw ConnectionLost("no in-process endpoint " + std::to_string(to));
    }
    // Round-trip through the wire codec so in-process runs exercise framing.
    net_.mailbox(to).push(decode_frame(encode_frame(frame)));
  }

  Frame recv(const RunId& run, std::chrono::milliseconds timeout) override {
    return net_.mailbox(id_).pop(run, timeout);
  }

  Frame recv_setup(std::chrono::milliseconds timeout) override {
    return net_.mailbox(id_).pop_setup(timeout);
  }

 private:
  InProcNetwork& net_;
  PartyId id_;
};

}  // namespace

InProcNetwork::InProcNetwork(std::size_t endpoints) {
  boxes_.reserve(endpoints);
  for (std::size_t i = 0; i < endpoints; ++i) {
    boxes_.push_back(std::make_unique<Mailbox>());
  }
}

std::unique_ptr<Transport> InProcNetwork::endpoint(PartyId id) {
  if (id >= boxes_.size()) {
    throw ConnectionLost("no in-process endpoint " + std::to_string(id));
  }
  return std::make_unique<InProcEndpoint>(*this, id);
}

Mailbox& InProcNetwork::mailbox(PartyId id) { return *boxes_.at(id); }

void TappedTransport::send(PartyId to, const Frame& frame) {
  if (tap_) {
    const auto wire = encode_frame(frame);
    tap_(inner_->self(), to, frame, wire);
  }
  inner_->send(to, frame);
}

}  // namespace ppelm
