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

#include "ppelm/messages.hpp"

namespace ppelm {

std::vector<std::uint8_t> encode_payload(const SetupMsg& m) {
  ByteWriter w;
  w.put_u32(m.party_id);
  w.put_u32(m.master_id);
  w.put_u64(m.instances);
  w.put_u64(m.cfg.modulus);
  w.put_u32(static_cast<std::uint32_t>(m.cfg.scale_bits));
  w.put_u32(static_cast<std::uint32_t>(m.plan.parties()));
  for (const auto& r : m.plan.ranges()) {
    w.put_u32(static_cast<std::uint32_t>(r.begin));
    w.put_u32(static_cast<std::uint32_t>(r.end));
  }
  w.put_real_matrix(m.w_slice);
  w.put_ring_matrix(RingMatrix(1, m.b_share.size(), m.b_share));
  w.put_u32(static_cast<std::uint32_t>(m.addresses.size()));
  for (const auto& a : m.addresses) w.put_string(a);
  return w.take();
}

std::vector<std::uint8_t> encode_payload(const AccumMsg& m) {
  ByteWriter w;
  w.put_u32(m.hop);
  w.put_ring_matrix(m.v);
  return w.take();
}

std::vector<std::uint8_t> encode_payload(const ResultMsg& m) {
  ByteWriter w;
  w.put_real_matrix(m.beta);
  return w.take();
}

std::vector<std::uint8_t> encode_payload(const AbortMsg& m) {
  ByteWriter w;
  w.put_u32(m.hop);
  w.put_string(m.kind);
  w.put_string(m.reason);
  return w.take();
}

SetupMsg decode_setup(std::span<const std::uint8_t> payload) {
  ByteReader r(payload);
  SetupMsg m;
  m.party_id = r.get_u32();
  m.master_id = r.get_u32();
  m.instances = r.get_u64();
  m.cfg.modulus = r.get_u64();
  m.cfg.scale_bits = static_cast<int>(r.get_u32());
  try {
    m.cfg.validate();
  } catch (const ConfigError& e) {
    throw MalformedFrame(std::string("SETUP field config: ") + e.what());
  }
  const std::uint32_t k = r.get_u32();
  if (k > payload.size() / 8) throw MalformedFrame("SETUP party count too large");
  std::vector<ColumnRange> ranges(k);
  for (auto& range : ranges) {
    range.begin = r.get_u32();
    range.end = r.get_u32();
  }
  try {
    m.plan = PartitionPlan(std::move(ranges));
  } catch (const DimensionMismatch& e) {
    throw MalformedFrame(std::string("SETUP plan: ") + e.what());
  }
  if (m.party_id >= m.plan.parties()) {
    throw MalformedFrame("SETUP party id outside plan");
  }
  m.w_slice = r.get_real_matrix();
  const RingMatrix b = r.get_ring_matrix(m.cfg);
  if (b.rows() != 1 && b.size() != 0) {
    throw MalformedFrame("SETUP bias share must be a single row");
  }
  m.b_share.assign(b.entries().begin(), b.entries().end());
  const std::uint32_t count = r.get_u32();
  if (count > payload.size()) throw MalformedFrame("SETUP address count too large");
  m.addresses.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) m.addresses.push_back(r.get_string());
  r.expect_end();
  return m;
}

AccumMsg decode_accum(std::span<const std::uint8_t> payload,
                      const FieldConfig& cfg) {
  ByteReader r(payload);
  AccumMsg m;
  m.hop = r.get_u32();
  m.v = r.get_ring_matrix(cfg);
  r.expect_end();
  return m;
}

ResultMsg decode_result(std::span<const std::uint8_t> payload) {
  ByteReader r(payload);
  ResultMsg m{r.get_real_matrix()};
  r.expect_end();
  return m;
}

AbortMsg decode_abort(std::span<const std::uint8_t> payload) {
  ByteReader r(payload);
  AbortMsg m;
  m.hop = r.get_u32();
  m.kind = r.get_string();
  m.reason = r.get_string();
  r.expect_end();
  return m;
}

std::uint32_t peek_hop(const Frame& frame) {
  if ((frame.type != MsgType::kAccum && frame.type != MsgType::kAbort) ||
      frame.payload.size() < 4) {
    return 0;
  }
  ByteReader r(frame.payload);
  return r.get_u32();
}

}  // namespace ppelm
