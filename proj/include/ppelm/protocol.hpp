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

// Ring secure-sum over Z/FZ and the privacy-preserving ELM training run
// built on it.
//
// Parties P_0..P_{k-1} each hold a vertical slice of the data. P_0 adds a
// uniform mask R to its partial pre-activation matrix and passes the result
// around the ring P_0 -> P_1 -> ... -> P_{k-1} -> P_0; each party adds its own
// partial. P_0 removes R and forwards the aggregate to the master, which
// decodes it, applies the activation and solves for beta. Every accumulator
// on the wire is uniformly distributed; labels never leave the master.
//
// Adversary model: semi-honest parties, no collusion with P_0.

#pragma once

#include <array>
#include <chrono>
#include <functional>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ppelm/elm.hpp"
#include "ppelm/field.hpp"
#include "ppelm/messages.hpp"
#include "ppelm/partition.hpp"
#include "ppelm/rng.hpp"
#include "ppelm/tcp_transport.hpp"
#include "ppelm/transport.hpp"

namespace ppelm {

// ---------------------------------------------------------------------------
// Secure multi-party addition.

// Called with every accumulator value that crosses the wire: hop h carries
// R + x_0 + ... + x_{h-1}. Returning false drops the message, which aborts
// the protocol with TransportFailure(h).
using HopHook = std::function<bool(std::uint32_t hop, RingElement v)>;

// Sequential ring secure-sum of one private residue per party (k >= 2).
// P_0 draws its mask from `p0_rng`. No partial result is released on abort.
RingElement sma_scalar(std::span<const RingElement> values,
                       const FieldConfig& cfg, ChaChaRng& p0_rng,
                       const HopHook& hook = {});

// ---------------------------------------------------------------------------
// Per-party computation.

// T_i[r][j] = sum_c to_fixed(x[r][c] * w[j][c]) + b_share[j]  (mod F).
// `parties` sets the headroom: each party's plaintext dot-product sum must
// stay within max_magnitude / (parties + 1) so the ring total cannot wrap.
// Throws RangeOverflow otherwise and DimensionMismatch on inconsistent
// shapes.
RingMatrix compute_partial(const PartyShare& share, const FieldConfig& cfg,
                           std::size_t parties = 1);

// ---------------------------------------------------------------------------
// Run bookkeeping.

enum class Phase { kSetup, kAccumulating, kUnmasking, kSolving, kDone, kFailed };

std::string_view to_string(Phase p);

class ProtocolRunState {
 public:
  ProtocolRunState() = default;
  ProtocolRunState(std::size_t parties, std::size_t instances,
                   std::size_t hidden)
      : parties_(parties), instances_(instances), hidden_(hidden) {}

  // Phases only move forward; accumulating hops must be consecutive from 1.
  // Throws PhaseViolation otherwise.
  void advance(Phase next, std::uint32_t hop = 0);
  void fail(std::string reason);

  Phase phase() const { return phase_; }
  std::uint32_t hop() const { return hop_; }
  const std::string& failure() const { return failure_; }
  std::size_t parties() const { return parties_; }
  std::size_t instances() const { return instances_; }
  std::size_t hidden() const { return hidden_; }

 private:
  Phase phase_ = Phase::kSetup;
  std::uint32_t hop_ = 0;
  std::size_t parties_ = 0;
  std::size_t instances_ = 0;
  std::size_t hidden_ = 0;
  std::string failure_;
};

struct TranscriptEntry {
  PartyId from = 0;
  PartyId to = 0;
  MsgType type = MsgType::kSetup;
  std::uint32_t hop = 0;
  std::uint32_t payload_len = 0;
  // SHA-256 of the encoded frame. SETUP frames are measured and hashed with
  // their address list cleared so transcripts compare across backends.
  std::array<std::uint8_t, 32> digest{};

  friend bool operator==(const TranscriptEntry&, const TranscriptEntry&) = default;
};

// Thread-safe frame observer: records the transcript and tracks the run
// phase from the frames it sees.
class RunMonitor {
 public:
  RunMonitor(std::size_t parties, std::size_t instances, std::size_t hidden)
      : state_(parties, instances, hidden) {}

  void observe(PartyId from, PartyId to, const Frame& frame,
               std::span<const std::uint8_t> wire);
  void mark(Phase phase);
  void fail(const std::string& reason);

  ProtocolRunState state() const;
  // Entries ordered by (type, hop, to, from): independent of thread timing.
  std::vector<TranscriptEntry> transcript() const;

 private:
  mutable std::mutex mu_;
  ProtocolRunState state_;
  std::vector<TranscriptEntry> entries_;
};

// ---------------------------------------------------------------------------
// Actors. Each party is a sequential state machine fed one frame at a time
// by a driver; the same actors run over either transport.

struct Outgoing {
  PartyId to = 0;
  Frame frame;
};

class Actor {
 public:
  virtual ~Actor() = default;
  virtual std::vector<Outgoing> start() { return {}; }
  virtual std::vector<Outgoing> on_frame(const Frame& frame) = 0;
  // Receive deadline expired or the transport failed.
  virtual std::vector<Outgoing> on_failure(const Error& error) = 0;
  virtual bool finished() const = 0;
};

// Supplies a party's private feature columns once the plan is known.
using DataSource = std::function<Matrix(const SetupMsg& setup)>;

class PartyActor : public Actor {
 public:
  // Only P_0 draws a mask; it is keyed from OS entropy when `mask_rng` is
  // unset.
  PartyActor(PartyId id, PartyId master, RunId run, DataSource data,
             std::optional<ChaChaRng> mask_rng = std::nullopt);

  std::vector<Outgoing> on_frame(const Frame& frame) override;
  std::vector<Outgoing> on_failure(const Error& error) override;
  bool finished() const override { return finished_; }

  // Invoked after SETUP is decoded (used to install TCP peer addresses).
  void set_setup_hook(std::function<void(const SetupMsg&)> hook) {
    setup_hook_ = std::move(hook);
  }

  bool failed() const { return failed_; }
  const std::optional<Matrix>& beta() const { return beta_; }
  // True while P_0 still holds its mask; cleared after unmasking or abort.
  bool holds_mask() const { return mask_.has_value(); }

 private:
  std::vector<Outgoing> handle_setup(const Frame& frame);
  std::vector<Outgoing> handle_accum(const Frame& frame);
  std::vector<Outgoing> abort(const Error& error);
  Frame frame(MsgType type, std::vector<std::uint8_t> payload) const;
  // Hop of the next accumulator this party waits for; 0 when none.
  std::uint32_t expected_hop() const;

  PartyId id_;
  PartyId master_;
  RunId run_;
  DataSource data_;
  std::optional<ChaChaRng> mask_rng_;
  std::function<void(const SetupMsg&)> setup_hook_;

  std::optional<SetupMsg> setup_;
  PartyShare share_;
  std::optional<RingMatrix> mask_;
  std::vector<Frame> early_;  // ACCUM frames that beat SETUP
  std::optional<Matrix> beta_;
  bool contributed_ = false;
  bool finished_ = false;
  bool failed_ = false;
};

struct MasterConfig {
  PartyId self = 0;
  RunId run{};
  PartitionPlan plan;
  FieldConfig cfg;
  HiddenLayerParams params;
  std::size_t instances = 0;
  // Empty: stop after the hidden matrix (no beta solve).
  std::vector<int> labels;
  int num_classes = 0;
  std::vector<std::string> addresses;
};

class MasterActor : public Actor {
 public:
  MasterActor(MasterConfig config, ChaChaRng share_rng, RunMonitor* monitor);

  std::vector<Outgoing> start() override;
  std::vector<Outgoing> on_frame(const Frame& frame) override;
  std::vector<Outgoing> on_failure(const Error& error) override;
  bool finished() const override { return finished_; }

  // Rethrows the failure as the matching error type, if any.
  void check() const;

  const Matrix& hidden_matrix() const { return hidden_; }
  const Matrix& beta() const { return beta_; }
  double protocol_seconds() const { return protocol_seconds_; }
  double solve_seconds() const { return solve_seconds_; }

 private:
  std::vector<Outgoing> broadcast_abort(std::uint32_t hop, const std::string& kind,
                                        const std::string& reason);
  Frame frame(MsgType type, std::vector<std::uint8_t> payload) const;
  void record_failure(std::uint32_t hop, const std::string& kind,
                      const std::string& reason);

  MasterConfig config_;
  ChaChaRng share_rng_;
  RunMonitor* monitor_;
  std::chrono::steady_clock::time_point started_;
  Matrix hidden_;
  Matrix beta_;
  double protocol_seconds_ = 0;
  double solve_seconds_ = 0;
  bool finished_ = false;

  bool failed_ = false;
  std::uint32_t fail_hop_ = 0;
  std::string fail_kind_;
  std::string fail_reason_;
};

// Master and P_0 co-located on one endpoint; frames between them stay local.
class CombinedActor : public Actor {
 public:
  CombinedActor(MasterActor& master, PartyActor& party, PartyId self)
      : master_(master), party_(party), self_(self) {}

  std::vector<Outgoing> start() override;
  std::vector<Outgoing> on_frame(const Frame& frame) override;
  std::vector<Outgoing> on_failure(const Error& error) override;
  bool finished() const override {
    return master_.finished() && party_.finished();
  }

 private:
  std::vector<Outgoing> route(std::vector<Outgoing> out, bool from_master);

  MasterActor& master_;
  PartyActor& party_;
  PartyId self_;
};

struct ActorSlot {
  Actor* actor = nullptr;
  Transport* transport = nullptr;
};

// Single-threaded deterministic pump over an in-process network. When no
// frame is pending and some actor is unfinished, unfinished actors get
// on_failure(Timeout); a second consecutive stall ends the run.
void run_cooperative(InProcNetwork& net, std::span<ActorSlot> slots,
                     const RunId& run);

// Drives one actor on the calling thread until it finishes. `first` is a
// frame already taken from the transport (e.g. by recv_setup).
void drive_actor(Actor& actor, Transport& transport, const RunId& run,
                 std::chrono::milliseconds timeout,
                 std::optional<Frame> first = std::nullopt);

// One thread per actor.
void run_threaded(std::span<ActorSlot> slots, const RunId& run,
                  std::chrono::milliseconds timeout);

// ---------------------------------------------------------------------------
// Training entry points.

enum class Backend { kInProc, kTcpLoopback };

std::string_view to_string(Backend b);
Backend parse_backend(std::string_view name);

using TransportWrapper =
    std::function<std::unique_ptr<Transport>(PartyId, std::unique_ptr<Transport>)>;

struct ProtocolOptions {
  Backend backend = Backend::kInProc;
  bool master_holds_data = false;
  // Unset: keyed from OS entropy.
  std::optional<std::uint64_t> mask_seed;
  std::optional<std::uint64_t> share_seed;
  std::optional<RunId> run_id;
  std::chrono::milliseconds timeout = kDefaultRecvTimeout;
  // Sees every frame as encoded on the wire.
  FrameTap tap;
  // Decorates each endpoint (fault injection in tests).
  TransportWrapper wrap;
};

struct SecureRunResult {
  ElmModel model;  // beta is 0 x 0 when no labels were given
  Matrix hidden;   // N x L, activation applied
  ProtocolRunState state;
  std::vector<TranscriptEntry> transcript;
  double protocol_seconds = 0;
  double solve_seconds = 0;
  double total_seconds = 0;
};

// Full run: setup, masked ring accumulation, unmasking, activation and the
// beta solve at the master. party_data[i] is P_i's N x n_i slice.
SecureRunResult secure_train(std::span<const Matrix> party_data,
                             const PartitionPlan& plan,
                             std::span<const int> labels,
                             const FieldConfig& cfg, Eigen::Index hidden,
                             Activation activation, std::uint64_t seed,
                             const ProtocolOptions& options = {},
                             int num_classes = 0);

// Hidden-layer matrix only.
Matrix secure_hidden_matrix(std::span<const Matrix> party_data,
                            const PartitionPlan& plan,
                            const HiddenLayerParams& params,
                            const FieldConfig& cfg,
                            const ProtocolOptions& options = {});

// Master side of a run whose parties are remote serve_party processes.
// `party_addresses[i]` is P_i's listen address; the transport must be
// endpoint k.
SecureRunResult run_remote_master(TcpTransport& transport,
                                  const std::vector<std::string>& party_addresses,
                                  const PartitionPlan& plan,
                                  std::span<const int> labels,
                                  std::size_t instances, const FieldConfig& cfg,
                                  Eigen::Index hidden, Activation activation,
                                  std::uint64_t seed,
                                  const ProtocolOptions& options = {},
                                  int num_classes = 0);

RunId random_run_id();

}  // namespace ppelm
