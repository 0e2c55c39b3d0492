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


#include <gtest/gtest.h>

#include "ppelm/messages.hpp"
#include "ppelm/rng.hpp"

namespace ppelm {
namespace {

const FieldConfig kCfg{};

RunId test_run() {
  RunId id{};
  for (std::size_t i = 0; i < id.size(); ++i) id[i] = static_cast<std::uint8_t>(i * 7);
  return id;
}

TEST(Frame, HeaderLayout) {
  const Frame f{MsgType::kAccum, test_run(), {0xAB}};
  const auto wire = encode_frame(f);
  ASSERT_EQ(wire.size(), kFrameHeaderSize + 1);
  EXPECT_EQ(std::string(wire.begin(), wire.begin() + 4), "PELM");
  EXPECT_EQ(wire[4], kFrameVersion);
  EXPECT_EQ(wire[5], 2);
  EXPECT_EQ(wire[6], 0);   // run id starts
  EXPECT_EQ(wire[22], 1);  // payload length, little-endian
  EXPECT_EQ(wire[23], 0);
  EXPECT_EQ(wire[26], 0xAB);
  EXPECT_EQ(decode_frame(wire), f);
}

TEST(Frame, RejectsBadHeaders) {
  auto wire = encode_frame({MsgType::kResult, test_run(), {1, 2, 3}});
  auto bad_magic = wire;
  bad_magic[0] = 'X';
  EXPECT_THROW(decode_frame(bad_magic), MalformedFrame);
  auto bad_version = wire;
  bad_version[4] = 9;
  EXPECT_THROW(decode_frame(bad_version), MalformedFrame);
  auto bad_type = wire;
  bad_type[5] = 0;
  EXPECT_THROW(decode_frame(bad_type), MalformedFrame);
  auto truncated = wire;
  truncated.pop_back();
  EXPECT_THROW(decode_frame(truncated), MalformedFrame);
  auto trailing = wire;
  trailing.push_back(0);
  EXPECT_THROW(decode_frame(trailing), MalformedFrame);
  EXPECT_THROW(decode_frame(std::span(wire).first(10)), MalformedFrame);
}

TEST(Frame, OversizedPayloadRejectedFromHeader) {
  auto wire = encode_frame({MsgType::kAccum, test_run(), {}});
  wire[25] = 0x7F;  // length ~ 2^31
  EXPECT_THROW(parse_frame_header(std::span(wire).first(kFrameHeaderSize)), MalformedFrame);
}

TEST(Codec, RingMatrixValuesAreLittleEndian) {
  ByteWriter w;
  w.put_ring_matrix(RingMatrix(1, 1, {RingElement{0x0102030405060708ULL}}));
  const auto bytes = w.take();
  ASSERT_EQ(bytes.size(), 16u);
  EXPECT_EQ(bytes[8], 0x08);
  EXPECT_EQ(bytes[15], 0x01);
}

TEST(Codec, UnreducedRingValueRejected) {
  ByteWriter w;
  w.put_ring_matrix(RingMatrix(1, 1, {RingElement{kCfg.modulus}}));
  const auto bytes = w.take();
  ByteReader r(bytes);
  EXPECT_THROW(r.get_ring_matrix(kCfg), MalformedFrame);
}

TEST(Codec, ShortReadsThrow) {
  const std::vector<std::uint8_t> bytes{1, 2, 3};
  ByteReader r(bytes);
  EXPECT_THROW(r.get_u64(), MalformedFrame);
}

TEST(Messages, SetupRoundTrip) {
  ChaChaRng rng(1);
  SetupMsg m;
  m.party_id = 1;
  m.master_id = 3;
  m.instances = 17;
  m.cfg = kCfg;
  m.plan = make_plan(7, 3);
  m.w_slice = Matrix::Random(5, 2);
  for (int j = 0; j < 5; ++j) m.b_share.push_back(ring_uniform_random(rng, kCfg));
  m.addresses = {"127.0.0.1:1", "127.0.0.1:2", "127.0.0.1:3", "127.0.0.1:4"};
  const SetupMsg d = decode_setup(encode_payload(m));
  EXPECT_EQ(d.party_id, 1u);
  EXPECT_EQ(d.master_id, 3u);
  EXPECT_EQ(d.instances, 17u);
  EXPECT_EQ(d.cfg, kCfg);
  EXPECT_EQ(d.plan, m.plan);
  EXPECT_EQ(d.w_slice, m.w_slice);
  EXPECT_EQ(d.b_share, m.b_share);
  EXPECT_EQ(d.addresses, m.addresses);
}

TEST(Messages, AccumResultAbortRoundTrip) {
  ChaChaRng rng(2);
  const AccumMsg a{4, RingMatrix::uniform_random(3, 2, rng, kCfg)};
  const auto da = decode_accum(encode_payload(a), kCfg);
  EXPECT_EQ(da.hop, 4u);
  EXPECT_EQ(da.v, a.v);

  const ResultMsg r{Matrix::Random(4, 2)};
  EXPECT_EQ(decode_result(encode_payload(r)).beta, r.beta);

  const AbortMsg ab{2, "RangeOverflow", "too big"};
  const auto dab = decode_abort(encode_payload(ab));
  EXPECT_EQ(dab.hop, 2u);
  EXPECT_EQ(dab.kind, "RangeOverflow");
  EXPECT_EQ(dab.reason, "too big");
}

TEST(Messages, PeekHop) {
  ChaChaRng rng(2);
  const auto f = make_frame(MsgType::kAccum, test_run(),
                            AccumMsg{5, RingMatrix::uniform_random(1, 1, rng, kCfg)});
  EXPECT_EQ(peek_hop(f), 5u);
  EXPECT_EQ(peek_hop(make_frame(MsgType::kResult, test_run(), ResultMsg{Matrix(0, 0)})), 0u);
}

TEST(Messages, TrailingBytesRejected) {
  auto payload = encode_payload(AbortMsg{1, "x", "y"});
  payload.push_back(0);
  EXPECT_THROW(decode_abort(payload), MalformedFrame);
}

}  // namespace
}  // namespace ppelm
