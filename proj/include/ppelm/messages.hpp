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

// Protocol message payloads carried inside Frames.
//
// SETUP   u32 party_id, u32 master_id, u64 instances, u64 modulus,
//         u32 scale_bits, u32 k, k x {u32 begin, u32 end},
//         real matrix W_slice (L x n_i), ring matrix b_share (1 x L),
//         u32 address count, count x string "host:port" (index = party id,
//         master last; empty for in-process runs)
// ACCUM   u32 hop, ring matrix V (N x L)
// RESULT  real matrix beta (L x K; 0 x 0 when only H was requested)
// ABORT   u32 hop, string error kind, string reason
//
// Matrices carry a {u32 rows, u32 cols} header; strings a u32 length.

#pragma once

#include <string>
#include <vector>

#include "ppelm/frame.hpp"
#include "ppelm/partition.hpp"

namespace ppelm {

struct SetupMsg {
  std::uint32_t party_id = 0;
  std::uint32_t master_id = 0;
  std::uint64_t instances = 0;
  FieldConfig cfg;
  PartitionPlan plan;
  Matrix w_slice;
  std::vector<RingElement> b_share;
  std::vector<std::string> addresses;
};

struct AccumMsg {
  std::uint32_t hop = 0;
  RingMatrix v;
};

struct ResultMsg {
  Matrix beta;
};

struct AbortMsg {
  std::uint32_t hop = 0;
  std::string kind;
  std::string reason;
};

std::vector<std::uint8_t> encode_payload(const SetupMsg& m);
std::vector<std::uint8_t> encode_payload(const AccumMsg& m);
std::vector<std::uint8_t> encode_payload(const ResultMsg& m);
std::vector<std::uint8_t> encode_payload(const AbortMsg& m);

// Decoders throw MalformedFrame on any structural problem.
SetupMsg decode_setup(std::span<const std::uint8_t> payload);
AccumMsg decode_accum(std::span<const std::uint8_t> payload,
                      const FieldConfig& cfg);
ResultMsg decode_result(std::span<const std::uint8_t> payload);
AbortMsg decode_abort(std::span<const std::uint8_t> payload);

// Hop field of an ACCUM or ABORT payload without decoding the rest; 0 for
// other message types or short payloads.
std::uint32_t peek_hop(const Frame& frame);

template <typename Msg>
Frame make_frame(MsgType type, const RunId& run, const Msg& msg) {
  return Frame{type, run, encode_payload(msg)};
}

}  // namespace ppelm
