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

// Wire framing. Layout, all integers little-endian:
//
//   offset  size  field
//   0       4     magic "PELM"
//   4       1     version (1)
//   5       1     msg_type (SETUP=1, ACCUM=2, RESULT=3, ABORT=4)
//   6       16    run_id
//   22      4     payload_len (u32)
//   26      ...   payload

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ppelm/elm.hpp"
#include "ppelm/field.hpp"

namespace ppelm {

inline constexpr std::array<std::uint8_t, 4> kFrameMagic = {'P', 'E', 'L', 'M'};
inline constexpr std::uint8_t kFrameVersion = 1;
inline constexpr std::size_t kFrameHeaderSize = 26;
inline constexpr std::uint32_t kMaxPayload = 1u << 30;

enum class MsgType : std::uint8_t {
  kSetup = 1,
  kAccum = 2,
  kResult = 3,
  kAbort = 4,
};

std::string_view to_string(MsgType t);

using RunId = std::array<std::uint8_t, 16>;

std::string to_hex(std::span<const std::uint8_t> bytes);

struct Frame {
  MsgType type = MsgType::kSetup;
  RunId run_id{};
  std::vector<std::uint8_t> payload;

  friend bool operator==(const Frame&, const Frame&) = default;
};

std::vector<std::uint8_t> encode_frame(const Frame& frame);

// Parses and validates a header; returns payload_len. Throws MalformedFrame
// on bad magic, unknown version, unknown type or oversize payload.
std::uint32_t parse_frame_header(std::span<const std::uint8_t> header);

// Decodes exactly one frame occupying all of `bytes`. Truncated or trailing
// input throws MalformedFrame.
Frame decode_frame(std::span<const std::uint8_t> bytes);

// Little-endian payload builder.
class ByteWriter {
 public:
  void put_u8(std::uint8_t v) { buf_.push_back(v); }
  void put_u32(std::uint32_t v);
  void put_u64(std::uint64_t v);
  void put_f64(double v);
  void put_string(std::string_view s);
  // {rows u32, cols u32} then rows*cols 8-byte residues, row-major.
  void put_ring_matrix(const RingMatrix& m);
  // {rows u32, cols u32} then rows*cols IEEE-754 doubles, row-major.
  void put_real_matrix(const Matrix& m);

  std::vector<std::uint8_t> take() { return std::move(buf_); }

 private:
  std::vector<std::uint8_t> buf_;
};

// Bounds-checked reader; every underflow throws MalformedFrame.
class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::uint8_t get_u8();
  std::uint32_t get_u32();
  std::uint64_t get_u64();
  double get_f64();
  std::string get_string();
  RingMatrix get_ring_matrix(const FieldConfig& cfg);
  Matrix get_real_matrix();

  bool at_end() const { return pos_ == bytes_.size(); }
  void expect_end() const;

 private:
  std::span<const std::uint8_t> take(std::size_t n);

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace ppelm
