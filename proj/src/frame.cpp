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

#include "ppelm/frame.hpp"

#include <algorithm>
#include <bit>

namespace ppelm {

std::string_view to_string(MsgType t) {
  switch (t) {
    case MsgType::kSetup:
      return "SETUP";
    case MsgType::kAccum:
      return "ACCUM";
    case MsgType::kResult:
      return "RESULT";
    case MsgType::kAbort:
      return "ABORT";
  }
  return "UNKNOWN";
}

std::string to_hex(std::span<const std::uint8_t> bytes) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (auto b : bytes) {
    out.push_back(kDigits[b >> 4]);
    out.push_back(kDigits[b & 0xf]);
  }
  return out;
}

namespace {

void store_u32(std::uint8_t* p, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) p[i] = static_cast<std::uint8_t>(v >> (8 * i));
}

std::uint32_t load_u32(const std::uint8_t* p) {
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

}  // namespace

std::vector<std::uint8_t> encode_frame(const Frame& frame) {
  if (frame.payload.size() > kMaxPayload) {
    throw MalformedFrame("payload of " + std::to_string(frame.payload.size()) +
                         " bytes exceeds frame limit");
  }
  std::vector<std::uint8_t> out(kFrameHeaderSize + frame.payload.size());
  std::copy(kFrameMagic.begin(), kFrameMagic.end(), out.begin());
  out[4] = kFrameVersion;
  out[5] = static_cast<std::uint8_t>(frame.type);
  std::copy(frame.run_id.begin(), frame.run_id.end(), out.begin() + 6);
  store_u32(out.data() + 22, static_cast<std::uint32_t>(frame.payload.size()));
  std::copy(frame.payload.begin(), frame.payload.end(),
            out.begin() + kFrameHeaderSize);
  return out;
}

std::uint32_t parse_frame_header(std::span<const std::uint8_t> header) {
  if (header.size() < kFrameHeaderSize) {
    throw MalformedFrame("truncated frame header (" +
                         std::to_string(header.size()) + " bytes)");
  }
  if (!std::equal(kFrameMagic.begin(), kFrameMagic.end(), header.begin())) {
    throw MalformedFrame("bad frame magic");
  }
  if (header[4] != kFrameVersion) {
    throw MalformedFrame("unsupported frame version " +
                         std::to_string(header[4]));
  }
  if (header[5] < 1 || header[5] > 4) {
    throw MalformedFrame("unknown message type " + std::to_string(header[5]));
  }
  const std::uint32_t len = load_u32(header.data() + 22);
  if (len > kMaxPayload) {
    throw MalformedFrame("declared payload length " + std::to_string(len) +
                         " exceeds limit");
  }
  return len;
}

Frame decode_frame(std::span<const std::uint8_t> bytes) {
  const std::uint32_t len = parse_frame_header(bytes);
  if (bytes.size() != kFrameHeaderSize + len) {
    throw MalformedFrame("frame declares " + std::to_string(len) +
                         " payload bytes, got " +
                         std::to_string(bytes.size() - kFrameHeaderSize));
  }
  Frame f;
  f.type = static_cast<MsgType>(bytes[5]);
  std::copy(bytes.begin() + 6, bytes.begin() + 22, f.run_id.begin());
  f.payload.assign(bytes.begin() + kFrameHeaderSize, bytes.end());
  return f;
}

void ByteWriter::put_u32(std::uint32_t v) {
  for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void ByteWriter::put_u64(std::uint64_t v) {
  for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void ByteWriter::put_f64(double v) { put_u64(std::bit_cast<std::uint64_t>(v)); }

void ByteWriter::put_string(std::string_view s) {
  put_u32(static_cast<std::uint32_t>(s.size()));
  buf_.insert(buf_.end(), s.begin(), s.end());
}

void ByteWriter::put_ring_matrix(const RingMatrix& m) {
  put_u32(static_cast<std::uint32_t>(m.rows()));
  put_u32(static_cast<std::uint32_t>(m.cols()));
  buf_.reserve(buf_.size() + m.size() * 8);
  for (auto e : m.entries()) put_u64(e.value);
}

void ByteWriter::put_real_matrix(const Matrix& m) {
  put_u32(static_cast<std::uint32_t>(m.rows()));
  put_u32(static_cast<std::uint32_t>(m.cols()));
  buf_.reserve(buf_.size() + static_cast<std::size_t>(m.size()) * 8);
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) put_f64(m(r, c));
  }
}

std::span<const std::uint8_t> ByteReader::take(std::size_t n) {
  if (bytes_.size() - pos_ < n) {
    throw MalformedFrame("payload truncated: need " + std::to_string(n) +
                         " bytes at offset " + std::to_string(pos_));
  }
  auto out = bytes_.subspan(pos_, n);
  pos_ += n;
  return out;
}

std::uint8_t ByteReader::get_u8() { return take(1)[0]; }

std::uint32_t ByteReader::get_u32() {
  auto b = take(4);
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | b[static_cast<std::size_t>(i)];
  return v;
}

std::uint64_t ByteReader::get_u64() {
  auto b = take(8);
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | b[static_cast<std::size_t>(i)];
  return v;
}

double ByteReader::get_f64() { return std::bit_cast<double>(get_u64()); }

std::string ByteReader::get_string() {
  const auto len = get_u32();
  auto b = take(len);
  return std::string(b.begin(), b.end());
}

RingMatrix ByteReader::get_ring_matrix(const FieldConfig& cfg) {
  const std::size_t rows = get_u32();
  const std::size_t cols = get_u32();
  if (rows != 0 && cols > (bytes_.size() - pos_) / 8 / rows) {
    throw MalformedFrame("ring matrix header exceeds payload");
  }
  std::vector<RingElement> entries(rows * cols);
  for (auto& e : entries) {
    e.value = get_u64();
    if (e.value >= cfg.modulus) {
      throw MalformedFrame("ring element not reduced modulo F");
    }
  }
  return RingMatrix(rows, cols, std::move(entries));
}

Matrix ByteReader::get_real_matrix() {
  const auto rows = static_cast<Eigen::Index>(get_u32());
  const auto cols = static_cast<Eigen::Index>(get_u32());
  if (rows != 0 &&
      static_cast<std::size_t>(cols) > (bytes_.size() - pos_) / 8 /
                                           static_cast<std::size_t>(rows)) {
    throw MalformedFrame("real matrix header exceeds payload");
  }
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = get_f64();
  }
  return m;
}

void ByteReader::expect_end() const {
  if (!at_end()) {
    throw MalformedFrame(std::to_string(bytes_.size() - pos_) +
                         " trailing payload bytes");
  }
}

}  // namespace ppelm
