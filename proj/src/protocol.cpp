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

#include "ppelm/protocol.hpp"

#include <sodium.h>

#include <algorithm>
#include <exception>
#include <thread>
#include <tuple>

namespace ppelm {

// ---------------------------------------------------------------------------
// Secure multi-party addition.

RingElement sma_scalar(std::span<const RingElement> values,
                       const FieldConfig& cfg, ChaChaRng& p0_rng,
                       const HopHook& hook) {
  if (values.size() < 2) {
    throw InvalidPartyCount("secure addition needs at least two parties, got " +
                            std::to_string(values.size()));
  }
  for (auto v : values) {
    if (v.value >= cfg.modulus) {
      throw RangeOverflow("party value " + std::to_string(v.value) +
                          " is not reduced modulo " + std::to_string(cfg.modulus));
    }
  }
  const auto k = static_cast<std::uint32_t>(values.size());
  const RingElement mask = ring_uniform_random(p0_rng, cfg);
  RingElement v = ring_add(mask, values[0], cfg);
  // Hop h delivers V to P_{h mod k}; hop k closes the ring at P_0.
  for (std::uint32_t hop = 1; hop <= k; ++hop) {
    if (hook && !hook(hop, v)) {
      throw TransportFailure(static_cast<int>(hop), "accumulator not delivered");
    }
    if (hop < k) v = ring_add(v, values[hop], cfg);
  }
  return ring_sub(v, mask, cfg);
}

// ---------------------------------------------------------------------------
// Per-party computation.

RingMatrix compute_partial(const PartyShare& share, const FieldConfig& cfg,
                           std::size_t parties) {
  const Matrix& x = share.x_slice;
  const Matrix& w = share.w_slice;
  if (x.cols() != w.cols()) {
    throw DimensionMismatch("party " + std::to_string(share.party_id) +
                            ": X slice has " + std::to_string(x.cols()) +
                            " columns, W slice has " + std::to_string(w.cols()));
  }
  if (share.b_share.size() != static_cast<std::size_t>(w.rows())) {
    throw DimensionMismatch("party " + std::to_string(share.party_id) +
                            ": bias share length " +
                            std::to_string(share.b_share.size()) +
                            " != hidden nodes " + std::to_string(w.rows()));
  }
  const int128 limit =
      static_cast<int128>(cfg.max_magnitude() / (std::max<std::size_t>(parties, 1) + 1));
  RingMatrix out(static_cast<std::size_t>(x.rows()),
                 static_cast<std::size_t>(w.rows()));
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    for (Eigen::Index j = 0; j < w.rows(); ++j) {
      int128 acc = 0;
      for (Eigen::Index c = 0; c < x.cols(); ++c) {
        acc += to_fixed(x(r, c) * w(j, c), cfg);
      }
      if (acc > limit || acc < -limit) {
        throw RangeOverflow("party " + std::to_string(share.party_id) +
                            ": partial pre-activation (" + std::to_string(r) +
                            ", " + std::to_string(j) +
                            ") exceeds the per-party fixed-point headroom");
      }
      out(static_cast<std::size_t>(r), static_cast<std::size_t>(j)) =
          ring_add(from_signed(acc, cfg),
                   share.b_share[static_cast<std::size_t>(j)], cfg);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Run bookkeeping.

std::string_view to_string(Phase p) {
  switch (p) {
    case Phase::kSetup:
      return "Setup";
    case Phase::kAccumulating:
      return "Accumulating";
    case Phase::kUnmasking:
      return "Unmasking";
    case Phase::kSolving:
      return "Solving";
    case Phase::kDone:
      return "Done";
    case Phase::kFailed:
      return "Failed";
  }
  return "Unknown";
}

void ProtocolRunState::advance(Phase next, std::uint32_t hop) {
  if (phase_ == Phase::kFailed) {
    throw PhaseViolation("run already failed: " + failure_);
  }
  if (next < phase_) {
    throw PhaseViolation("phase " + std::string(to_string(next)) +
                         " after " + std::string(to_string(phase_)));
  }
  const bool chained = phase_ == Phase::kAccumulating && hop == hop_ + 1;
  if (next == Phase::kAccumulating && !(chained || (phase_ == Phase::kSetup && hop == 1))) {
    throw PhaseViolation("accumulator hop " + std::to_string(hop) +
                         " out of canonical order (last hop " +
                         std::to_string(hop_) + ")");
  }
  if (next == Phase::kUnmasking && hop != 0 && !chained) {
    throw PhaseViolation("ring closed at hop " + std::to_string(hop) +
                         " after hop " + std::to_string(hop_));
  }
  phase_ = next;
  if (hop != 0) hop_ = hop;
}

void ProtocolRunState::fail(std::string reason) {
  if (phase_ == Phase::kFailed) return;
  phase_ = Phase::kFailed;
  failure_ = std::move(reason);
}

namespace {

std::array<std::uint8_t, 32> sha256(std::span<const std::uint8_t> bytes) {
  std::array<std::uint8_t, 32> out{};
  crypto_hash_sha256(out.data(), bytes.data(), bytes.size());
  return out;
}

int type_rank(MsgType t) { return static_cast<int>(t); }

}  // namespace

void RunMonitor::observe(PartyId from, PartyId to, const Frame& frame,
                         std::span<const std::uint8_t> wire) {
  TranscriptEntry e;
  e.from = from;
  e.to = to;
  e.type = frame.type;
  e.hop = peek_hop(frame);
  e.payload_len = static_cast<std::uint32_t>(frame.payload.size());
  if (frame.type == MsgType::kSetup) {
    SetupMsg setup = decode_setup(frame.payload);
    setup.addresses.clear();
    const auto stripped = encode_frame(make_frame(MsgType::kSetup, frame.run_id, setup));
    e.digest = sha256(stripped);
    e.payload_len = static_cast<std::uint32_t>(stripped.size() - kFrameHeaderSize);
  } else {
    e.digest = sha256(wire);
  }

  std::lock_guard lock(mu_);
  entries_.push_back(e);
  try {
    const auto k = static_cast<std::uint32_t>(state_.parties());
    switch (frame.type) {
      case MsgType::kAccum:
        if (e.hop < k) {
          state_.advance(Phase::kAccumulating, e.hop);
        } else if (e.hop == k) {
          state_.advance(Phase::kUnmasking, e.hop);
        } else {
          state_.advance(Phase::kSolving);
        }
        break;
      case MsgType::kAbort:
        state_.fail("party " + std::to_string(from) + " aborted at hop " +
                    std::to_string(e.hop));
        break;
      default:
        break;
    }
  } catch (const PhaseViolation& err) {
    state_.fail(err.what());
  }
}

void RunMonitor::mark(Phase phase) {
  std::lock_guard lock(mu_);
  try {
    state_.advance(phase);
  } catch (const PhaseViolation& err) {
    state_.fail(err.what());
  }
}

void RunMonitor::fail(const std::string& reason) {
  std::lock_guard lock(mu_);
  state_.fail(reason);
}

ProtocolRunState RunMonitor::state() const {
  std::lock_guard lock(mu_);
  return state_;
}

std::vector<TranscriptEntry> RunMonitor::transcript() const {
  std::vector<TranscriptEntry> out;
  {
    std::lock_guard lock(mu_);
    out = entries_;
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const TranscriptEntry& a, const TranscriptEntry& b) {
                     return std::make_tuple(type_rank(a.type), a.hop, a.to, a.from) <
                            std::make_tuple(type_rank(b.type), b.hop, b.to, b.from);
                   });
  return out;
}

// ---------------------------------------------------------------------------
// Party actor.

PartyActor::PartyActor(PartyId id, PartyId master, RunId run, DataSource data,
                       std::optional<ChaChaRng> mask_rng)
    : id_(id),
      master_(master),
      run_(run),
      data_(std::move(data)),
      mask_rng_(std::move(mask_rng)) {}

Frame PartyActor::frame(MsgType type, std::vector<std::uint8_t> payload) const {
  return Frame{type, run_, std::move(payload)};
}

std::uint32_t PartyActor::expected_hop() const {
  if (!setup_ || contributed_) return 0;
  return id_ == 0 ? static_cast<std::uint32_t>(setup_->plan.parties()) : id_;
}

std::vector<Outgoing> PartyActor::on_frame(const Frame& f) {
  if (finished_) return {};
  try {
    switch (f.type) {
      case MsgType::kSetup:
        return handle_setup(f);
      case MsgType::kAccum:
        if (!setup_) {
          early_.push_back(f);
          return {};
        }
        return handle_accum(f);
      case MsgType::kResult:
        if (!setup_) throw PhaseViolation("RESULT before SETUP");
        beta_ = decode_result(f.payload).beta;
        mask_.reset();
        finished_ = true;
        return {};
      case MsgType::kAbort:
        mask_.reset();
        finished_ = true;
        failed_ = true;
        return {};
    }
    throw MalformedFrame("unknown message type");
  } catch (const Error& e) {
    return abort(e);
  }
}

std::vector<Outgoing> PartyActor::on_failure(const Error& error) {
  if (finished_) return {};
  return abort(error);
}

std::vector<Outgoing> PartyActor::abort(const Error& error) {
  const std::uint32_t hop = expected_hop();
  mask_.reset();
  finished_ = true;
  failed_ = true;
  AbortMsg msg{hop, error.kind(), error.what()};
  return {Outgoing{master_, frame(MsgType::kAbort, encode_payload(msg))}};
}

std::vector<Outgoing> PartyActor::handle_setup(const Frame& f) {
  if (setup_) throw PhaseViolation("duplicate SETUP for party " + std::to_string(id_));
  SetupMsg setup = decode_setup(f.payload);
  if (setup.party_id != id_) {
    throw PhaseViolation("SETUP for party " + std::to_string(setup.party_id) +
                         " delivered to party " + std::to_string(id_));
  }
  master_ = setup.master_id;
  if (setup_hook_) setup_hook_(setup);

  const ColumnRange range = setup.plan.range(id_);
  share_.party_id = id_;
  share_.x_slice = data_(setup);
  share_.w_slice = setup.w_slice;
  share_.b_share = setup.b_share;
  if (static_cast<std::uint64_t>(share_.x_slice.rows()) != setup.instances) {
    throw DimensionMismatch("party " + std::to_string(id_) + " holds " +
                            std::to_string(share_.x_slice.rows()) +
                            " instances, master expects " +
                            std::to_string(setup.instances));
  }
  if (static_cast<std::size_t>(share_.x_slice.cols()) != range.size() ||
      static_cast<std::size_t>(share_.w_slice.cols()) != range.size()) {
    throw DimensionMismatch("party " + std::to_string(id_) +
                            " slice width does not match its plan range of " +
                            std::to_string(range.size()) + " columns");
  }
  setup_ = std::move(setup);

  std::vector<Outgoing> out;
  if (id_ == 0) {
    const auto& cfg = setup_->cfg;
    const std::size_t k = setup_->plan.parties();
    RingMatrix v = compute_partial(share_, cfg, k);
    if (!mask_rng_) mask_rng_ = ChaChaRng::from_entropy();
    mask_ = RingMatrix::uniform_random(v.rows(), v.cols(), *mask_rng_, cfg);
    v.add_assign(*mask_, cfg);
    out.push_back({1, frame(MsgType::kAccum, encode_payload(AccumMsg{1, std::move(v)}))});
  }
  auto early = std::move(early_);
  early_.clear();
  for (const auto& pending : early) {
    auto more = handle_accum(pending);
    out.insert(out.end(), std::make_move_iterator(more.begin()),
               std::make_move_iterator(more.end()));
  }
  return out;
}

std::vector<Outgoing> PartyActor::handle_accum(const Frame& f) {
  const auto& cfg = setup_->cfg;
  const auto k = static_cast<std::uint32_t>(setup_->plan.parties());
  AccumMsg msg = decode_accum(f.payload, cfg);
  const std::uint32_t expected = expected_hop();
  if (expected == 0 || msg.hop != expected) {
    throw PhaseViolation("party " + std::to_string(id_) + " received hop " +
                         std::to_string(msg.hop) + ", expected " +
                         (expected == 0 ? std::string("none")
                                        : std::to_string(expected)));
  }
  if (msg.v.rows() != setup_->instances ||
      msg.v.cols() != static_cast<std::size_t>(share_.w_slice.rows())) {
    throw DimensionMismatch("accumulator shape " + std::to_string(msg.v.rows()) +
                            "x" + std::to_string(msg.v.cols()) +
                            " does not match N x L");
  }
  contributed_ = true;
  if (id_ == 0) {
    msg.v.sub_assign(*mask_, cfg);
    mask_.reset();
    AccumMsg unmasked{k + 1, std::move(msg.v)};
    return {{master_, frame(MsgType::kAccum, encode_payload(unmasked))}};
  }
  msg.v.add_assign(compute_partial(share_, cfg, k), cfg);
  const PartyId next = (id_ + 1) % k;
  AccumMsg forward{msg.hop + 1, std::move(msg.v)};
  return {{next, frame(MsgType::kAccum, encode_payload(forward))}};
}

// ---------------------------------------------------------------------------
// Master actor.

MasterActor::MasterActor(MasterConfig config, ChaChaRng share_rng,
                         RunMonitor* monitor)
    : config_(std::move(config)), share_rng_(std::move(share_rng)), monitor_(monitor) {}

Frame MasterActor::frame(MsgType type, std::vector<std::uint8_t> payload) const {
  return Frame{type, config_.run, std::move(payload)};
}

std::vector<Outgoing> MasterActor::start() {
  started_ = std::chrono::steady_clock::now();
  try {
    const auto& plan = config_.plan;
    const auto& cfg = config_.cfg;
    if (!config_.labels.empty() && config_.labels.size() != config_.instances) {
      throw DimensionMismatch("master holds " + std::to_string(config_.labels.size()) +
                              " labels for " + std::to_string(config_.instances) +
                              " instances");
    }
    const int128 bias_limit = static_cast<int128>(cfg.max_magnitude() / (plan.parties() + 1));
    for (Eigen::Index j = 0; j < config_.params.hidden(); ++j) {
      const int128 b = to_fixed(config_.params.biases(j), cfg);
      if (b > bias_limit || b < -bias_limit) {
        throw RangeOverflow("bias " + std::to_string(j) + " exceeds fixed-point headroom");
      }
    }
    auto shares = split_weights(config_.params, plan, cfg, share_rng_);
    std::vector<Outgoing> out;
    out.reserve(shares.size());
    for (auto& share : shares) {
      SetupMsg setup;
      setup.party_id = static_cast<std::uint32_t>(share.party_id);
      setup.master_id = config_.self;
      setup.instances = config_.instances;
      setup.cfg = cfg;
      setup.plan = plan;
      setup.w_slice = std::move(share.w_slice);
      setup.b_share = std::move(share.b_share);
      setup.addresses = config_.addresses;
      out.push_back({static_cast<PartyId>(share.party_id),
                     frame(MsgType::kSetup, encode_payload(setup))});
    }
    return out;
  } catch (const Error& e) {
    record_failure(0, e.kind(), e.what());
    return broadcast_abort(0, e.kind(), e.what());
  }
}

std::vector<Outgoing> MasterActor::on_frame(const Frame& f) {
  if (f.type == MsgType::kAbort) {
    AbortMsg msg;
    try {
      msg = decode_abort(f.payload);
    } catch (const MalformedFrame& e) {
      msg = {0, "MalformedFrame", e.what()};
    }
    if (failed_) {
      if (msg.hop != 0 && (fail_hop_ == 0 || msg.hop < fail_hop_)) fail_hop_ = msg.hop;
      return {};
    }
    if (finished_) return {};
    record_failure(msg.hop, msg.kind, msg.reason);
    return broadcast_abort(msg.hop, msg.kind, msg.reason);
  }
  if (finished_) return {};
  try {
    const auto k = static_cast<std::uint32_t>(config_.plan.parties());
    if (f.type != MsgType::kAccum) {
      throw PhaseViolation("master received unexpected " +
                           std::string(to_string(f.type)));
    }
    AccumMsg msg = decode_accum(f.payload, config_.cfg);
    if (msg.hop != k + 1) {
      throw PhaseViolation("master received accumulator hop " +
                           std::to_string(msg.hop) + ", expected the unmasked "
                           "aggregate (hop " + std::to_string(k + 1) + ")");
    }
    if (msg.v.rows() != config_.instances ||
        msg.v.cols() != static_cast<std::size_t>(config_.params.hidden())) {
      throw DimensionMismatch("aggregate has the wrong shape");
    }
    const auto aggregated = std::chrono::steady_clock::now();
    protocol_seconds_ = std::chrono::duration<double>(aggregated - started_).count();
    if (monitor_) monitor_->mark(Phase::kSolving);

    hidden_ = activate(decode_matrix(msg.v, config_.cfg), config_.params.activation);
    if (!config_.labels.empty()) {
      const int classes = config_.num_classes > 0
                              ? config_.num_classes
                              : *std::max_element(config_.labels.begin(),
                                                  config_.labels.end());
      beta_ = solve_output_weights(hidden_, config_.labels, classes);
    }
    solve_seconds_ = std::chrono::duration<double>(
                         std::chrono::steady_clock::now() - aggregated)
                         .count();
    finished_ = true;
    if (monitor_) monitor_->mark(Phase::kDone);

    std::vector<Outgoing> out;
    const auto payload = encode_payload(ResultMsg{beta_});
    for (std::size_t p = 0; p < config_.plan.parties(); ++p) {
      out.push_back({static_cast<PartyId>(p), frame(MsgType::kResult, payload)});
    }
    return out;
  } catch (const Error& e) {
    record_failure(peek_hop(f), e.kind(), e.what());
    return broadcast_abort(peek_hop(f), e.kind(), e.what());
  }
}

std::vector<Outgoing> MasterActor::on_failure(const Error& error) {
  if (finished_) return {};
  std::uint32_t hop = 0;
  if (monitor_) {
    const auto state = monitor_->state();
    hop = state.hop() + 1;
  }
  record_failure(hop, "TransportFailure", std::string(error.kind()) + ": " + error.what());
  return broadcast_abort(hop, "TransportFailure", error.what());
}

void MasterActor::record_failure(std::uint32_t hop, const std::string& kind,
                                 const std::string& reason) {
  failed_ = true;
  finished_ = true;
  fail_hop_ = hop;
  fail_kind_ = kind;
  fail_reason_ = reason;
  if (monitor_) monitor_->fail(kind + " at hop " + std::to_string(hop) + ": " + reason);
}

std::vector<Outgoing> MasterActor::broadcast_abort(std::uint32_t hop,
                                                   const std::string& kind,
                                                   const std::string& reason) {
  const auto payload = encode_payload(AbortMsg{hop, kind, reason});
  std::vector<Outgoing> out;
  for (std::size_t p = 0; p < config_.plan.parties(); ++p) {
    out.push_back({static_cast<PartyId>(p), frame(MsgType::kAbort, payload)});
  }
  return out;
}

void MasterActor::check() const {
  if (!finished_) {
    throw TransportFailure(static_cast<int>(fail_hop_), "run did not complete");
  }
  if (!failed_) return;
  const std::string what = fail_reason_;
  if (fail_kind_ == "PhaseViolation") throw PhaseViolation(what);
  if (fail_kind_ == "RangeOverflow") throw RangeOverflow(what);
  if (fail_kind_ == "DimensionMismatch") throw DimensionMismatch(what);
  if (fail_kind_ == "ConvergenceFailure") throw ConvergenceFailure(what);
  if (fail_kind_ == "InvalidPartyCount") throw InvalidPartyCount(what);
  throw TransportFailure(static_cast<int>(fail_hop_), fail_kind_ + ": " + what);
}

// ---------------------------------------------------------------------------
// Co-located master and P_0.

std::vector<Outgoing> CombinedActor::start() { return route(master_.start(), true); }

std::vector<Outgoing> CombinedActor::on_frame(const Frame& f) {
  if (f.type == MsgType::kAbort) return route(master_.on_frame(f), true);
  return route(party_.on_frame(f), false);
}

std::vector<Outgoing> CombinedActor::on_failure(const Error& error) {
  auto out = route(party_.on_failure(error), false);
  auto more = route(master_.on_failure(error), true);
  out.insert(out.end(), std::make_move_iterator(more.begin()),
             std::make_move_iterator(more.end()));
  return out;
}

std::vector<Outgoing> CombinedActor::route(std::vector<Outgoing> out, bool from_master) {
  std::vector<Outgoing> wire;
  for (auto& o : out) {
    if (o.to != self_) {
      wire.push_back(std::move(o));
      continue;
    }
    auto next = from_master ? party_.on_frame(o.frame) : master_.on_frame(o.frame);
    auto routed = route(std::move(next), !from_master);
    wire.insert(wire.end(), std::make_move_iterator(routed.begin()),
                std::make_move_iterator(routed.end()));
  }
  return wire;
}

// ---------------------------------------------------------------------------
// Drivers.

namespace {

void send_all(Actor& actor, Transport& transport, std::vector<Outgoing> out) {
  for (auto& o : out) {
    try {
      transport.send(o.to, o.frame);
    } catch (const TransportError& e) {
      send_all(actor, transport, actor.on_failure(e));
    }
  }
}

}  // namespace

void run_cooperative(InProcNetwork& net, std::span<ActorSlot> slots,
                     const RunId& run) {
  for (auto& slot : slots) send_all(*slot.actor, *slot.transport, slot.actor->start());
  int stalls = 0;
  for (;;) {
    bool progress = false;
    for (auto& slot : slots) {
      auto& box = net.mailbox(slot.transport->self());
      while (auto f = box.try_pop(run)) {
        progress = true;
        send_all(*slot.actor, *slot.transport, slot.actor->on_frame(*f));
      }
    }
    const bool done = std::all_of(slots.begin(), slots.end(),
                                  [](const ActorSlot& s) { return s.actor->finished(); });
    if (progress) {
      stalls = 0;
      continue;
    }
    if (done || ++stalls > 1) return;
    for (auto& slot : slots) {
      if (!slot.actor->finished()) {
        send_all(*slot.actor, *slot.transport,
                 slot.actor->on_failure(Timeout("no frame in flight for this run")));
      }
    }
  }
}

void drive_actor(Actor& actor, Transport& transport, const RunId& run,
                 std::chrono::milliseconds timeout, std::optional<Frame> first) {
  send_all(actor, transport, actor.start());
  if (first) send_all(actor, transport, actor.on_frame(*first));
  while (!actor.finished()) {
    std::vector<Outgoing> out;
    try {
      const Frame f = transport.recv(run, timeout);
      out = actor.on_frame(f);
    } catch (const TransportError& e) {
      out = actor.on_failure(e);
    }
    send_all(actor, transport, std::move(out));
  }
}

void run_threaded(std::span<ActorSlot> slots, const RunId& run,
                  std::chrono::milliseconds timeout) {
  std::vector<std::exception_ptr> errors(slots.size());
  std::vector<std::thread> threads;
  threads.reserve(slots.size());
  for (std::size_t i = 0; i < slots.size(); ++i) {
    threads.emplace_back([&, i] {
      try {
        drive_actor(*slots[i].actor, *slots[i].transport, run, timeout);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

// ---------------------------------------------------------------------------
// Training entry points.

std::string_view to_string(Backend b) {
  switch (b) {
    case Backend::kInProc:
      return "inproc";
    case Backend::kTcpLoopback:
      return "tcp";
  }
  return "unknown";
}

Backend parse_backend(std::string_view name) {
  if (name == "inproc") return Backend::kInProc;
  if (name == "tcp") return Backend::kTcpLoopback;
  throw ConfigError("unknown transport '" + std::string(name) +
                    "' (expected inproc|tcp)");
}

RunId random_run_id() {
  auto rng = ChaChaRng::from_entropy();
  RunId id{};
  const std::uint64_t a = rng();
  const std::uint64_t b = rng();
  for (int i = 0; i < 8; ++i) {
    id[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(a >> (8 * i));
    id[static_cast<std::size_t>(8 + i)] = static_cast<std::uint8_t>(b >> (8 * i));
  }
  return id;
}

namespace {

ChaChaRng make_rng(const std::optional<std::uint64_t>& seed) {
  return seed ? ChaChaRng(*seed) : ChaChaRng::from_entropy();
}

struct ProtocolInputs {
  std::span<const Matrix> party_data;
  const PartitionPlan& plan;
  const HiddenLayerParams& params;
  std::span<const int> labels;
  int num_classes;
  const FieldConfig& cfg;
};

SecureRunResult run_protocol(const ProtocolInputs& in, const ProtocolOptions& options) {
  in.cfg.validate();
  const std::size_t k = in.plan.parties();
  if (k < 2) throw InvalidPartyCount("a run needs at least two parties");
  if (in.party_data.size() != k) {
    throw DimensionMismatch(std::to_string(in.party_data.size()) +
                            " data slices for a " + std::to_string(k) +
                            "-party plan");
  }
  if (static_cast<std::size_t>(in.params.features()) != in.plan.features()) {
    throw DimensionMismatch("hidden layer width does not match the plan");
  }
  const auto instances = static_cast<std::size_t>(in.party_data[0].rows());
  for (std::size_t p = 0; p < k; ++p) {
    if (static_cast<std::size_t>(in.party_data[p].rows()) != instances) {
      throw DimensionMismatch("parties disagree on the instance count");
    }
    if (static_cast<std::size_t>(in.party_data[p].cols()) != in.plan.range(p).size()) {
      throw DimensionMismatch("party " + std::to_string(p) +
                              " slice width does not match the plan");
    }
  }

  const RunId run = options.run_id.value_or(random_run_id());
  const bool combined = options.master_holds_data;
  const auto master_id = static_cast<PartyId>(combined ? 0 : k);
  const std::size_t endpoints = combined ? k : k + 1;

  RunMonitor monitor(k, instances, static_cast<std::size_t>(in.params.hidden()));
  FrameTap tap = [&monitor, &options](PartyId from, PartyId to, const Frame& f,
                                      std::span<const std::uint8_t> wire) {
    monitor.observe(from, to, f, wire);
    if (options.tap) options.tap(from, to, f, wire);
  };

  MasterConfig mc;
  mc.self = master_id;
  mc.run = run;
  mc.plan = in.plan;
  mc.cfg = in.cfg;
  mc.params = in.params;
  mc.instances = instances;
  mc.labels.assign(in.labels.begin(), in.labels.end());
  mc.num_classes = in.num_classes;

  std::unique_ptr<InProcNetwork> net;
  std::vector<std::unique_ptr<Transport>> transports;
  if (options.backend == Backend::kInProc) {
    net = std::make_unique<InProcNetwork>(endpoints);
    for (std::size_t i = 0; i < endpoints; ++i) {
      transports.push_back(net->endpoint(static_cast<PartyId>(i)));
    }
  } else {
    std::vector<TcpTransport*> raw;
    for (std::size_t i = 0; i < endpoints; ++i) {
      auto t = std::make_unique<TcpTransport>(static_cast<PartyId>(i),
                                              HostPort{"127.0.0.1", 0});
      raw.push_back(t.get());
      transports.push_back(std::move(t));
    }
    for (auto* t : raw) {
      for (std::size_t i = 0; i < endpoints; ++i) {
        t->set_peer(static_cast<PartyId>(i), raw[i]->local_address());
      }
    }
    for (auto* t : raw) mc.addresses.push_back(t->local_address().str());
  }
  for (std::size_t i = 0; i < endpoints; ++i) {
    auto tapped = std::make_unique<TappedTransport>(std::move(transports[i]), tap);
    transports[i] = options.wrap ? options.wrap(static_cast<PartyId>(i), std::move(tapped))
                                 : std::move(tapped);
  }

  std::vector<std::unique_ptr<PartyActor>> parties;
  for (std::size_t p = 0; p < k; ++p) {
    const Matrix* slice = &in.party_data[p];
    std::optional<ChaChaRng> rng;
    if (p == 0) rng = make_rng(options.mask_seed);
    parties.push_back(std::make_unique<PartyActor>(
        static_cast<PartyId>(p), master_id, run,
        [slice](const SetupMsg&) { return *slice; }, std::move(rng)));
  }
  MasterActor master(std::move(mc), make_rng(options.share_seed), &monitor);
  std::unique_ptr<CombinedActor> combo;

  std::vector<ActorSlot> slots;
  if (combined) {
    combo = std::make_unique<CombinedActor>(master, *parties[0], 0);
    slots.push_back({combo.get(), transports[0].get()});
  } else {
    slots.push_back({&master, transports[k].get()});
    slots.push_back({parties[0].get(), transports[0].get()});
  }
  for (std::size_t p = 1; p < k; ++p) slots.push_back({parties[p].get(), transports[p].get()});

  const auto t0 = std::chrono::steady_clock::now();
  if (options.backend == Backend::kInProc) {
    run_cooperative(*net, slots, run);
  } else {
    run_threaded(slots, run, options.timeout);
  }
  const double total =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  master.check();
  const auto state = monitor.state();
  if (state.phase() == Phase::kFailed) throw PhaseViolation(state.failure());

  SecureRunResult result;
  result.model.params = in.params;
  result.model.beta = master.beta();
  result.hidden = master.hidden_matrix();
  result.state = state;
  result.transcript = monitor.transcript();
  result.protocol_seconds = master.protocol_seconds();
  result.solve_seconds = master.solve_seconds();
  result.total_seconds = total;
  return result;
}

}  // namespace

SecureRunResult secure_train(std::span<const Matrix> party_data,
                             const PartitionPlan& plan,
                             std::span<const int> labels,
                             const FieldConfig& cfg, Eigen::Index hidden,
                             Activation activation, std::uint64_t seed,
                             const ProtocolOptions& options, int num_classes) {
  if (labels.empty()) throw DimensionMismatch("master holds no labels");
  const auto params = init_hidden(seed, hidden, static_cast<Eigen::Index>(plan.features()),
                                  activation);
  return run_protocol({party_data, plan, params, labels, num_classes, cfg}, options);
}

Matrix secure_hidden_matrix(std::span<const Matrix> party_data,
                            const PartitionPlan& plan,
                            const HiddenLayerParams& params,
                            const FieldConfig& cfg,
                            const ProtocolOptions& options) {
  return run_protocol({party_data, plan, params, {}, 0, cfg}, options).hidden;
}

SecureRunResult run_remote_master(TcpTransport& transport,
                                  const std::vector<std::string>& party_addresses,
                                  const PartitionPlan& plan,
                                  std::span<const int> labels,
                                  std::size_t instances, const FieldConfig& cfg,
                                  Eigen::Index hidden, Activation activation,
                                  std::uint64_t seed,
                                  const ProtocolOptions& options,
                                  int num_classes) {
  cfg.validate();
  const std::size_t k = plan.parties();
  if (party_addresses.size() != k) {
    throw ConfigError(std::to_string(party_addresses.size()) +
                      " party addresses for a " + std::to_string(k) + "-party plan");
  }
  if (transport.self() != k) {
    throw ConfigError("remote master must use endpoint id k = " + std::to_string(k));
  }
  const RunId run = options.run_id.value_or(random_run_id());
  RunMonitor monitor(k, instances, static_cast<std::size_t>(hidden));
  for (std::size_t p = 0; p < k; ++p) {
    transport.set_peer(static_cast<PartyId>(p), HostPort::parse(party_addresses[p]));
  }

  MasterConfig mc;
  mc.self = static_cast<PartyId>(k);
  mc.run = run;
  mc.plan = plan;
  mc.cfg = cfg;
  mc.params = init_hidden(seed, hidden, static_cast<Eigen::Index>(plan.features()), activation);
  mc.instances = instances;
  mc.labels.assign(labels.begin(), labels.end());
  mc.num_classes = num_classes;
  mc.addresses = party_addresses;
  mc.addresses.push_back(transport.local_address().str());
  const auto params = mc.params;

  TappedTransport tapped(transport, [&monitor, &options](PartyId from, PartyId to,
                                                         const Frame& f,
                                                         std::span<const std::uint8_t> wire) {
    monitor.observe(from, to, f, wire);
    if (options.tap) options.tap(from, to, f, wire);
  });
  MasterActor master(std::move(mc), make_rng(options.share_seed), &monitor);
  const auto t0 = std::chrono::steady_clock::now();
  drive_actor(master, tapped, run, options.timeout);
  const double total =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  master.check();

  SecureRunResult result;
  result.model.params = params;
  result.model.beta = master.beta();
  result.hidden = master.hidden_matrix();
  result.state = monitor.state();
  result.transcript = monitor.transcript();
  result.protocol_seconds = master.protocol_seconds();
  result.solve_seconds = master.solve_seconds();
  result.total_seconds = total;
  return result;
}

}  // namespace ppelm
