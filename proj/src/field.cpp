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

#include "ppelm/field.hpp"

#include <cmath>
#include <sstream>

namespace ppelm {

void FieldConfig::validate() const {
  if (modulus < 2 || modulus >= (std::uint64_t{1} << 63)) {
    throw ConfigError("modulus must lie in [2, 2^63), got " +
                      std::to_string(modulus));
  }
  if (scale_bits < 0 || scale_bits > 52) {
    throw ConfigError("scale_bits must lie in [0, 52], got " +
                      std::to_string(scale_bits));
  }
  if (max_magnitude() < (std::uint64_t{1} << scale_bits)) {
    throw ConfigError("modulus " + std::to_string(modulus) +
                      " cannot represent 1.0 at scale_bits " +
                      std::to_string(scale_bits));
  }
}

FieldConfig FieldConfig::mersenne(int bits, int scale_bits) {
  switch (bits) {
    case 13:
    case 17:
    case 19:
    case 31:
    case 61:
      break;
    default:
      throw ConfigError("field bits must be a Mersenne-prime exponent "
                        "(13, 17, 19, 31, 61), got " +
                        std::to_string(bits));
  }
  FieldConfig cfg{(std::uint64_t{1} << bits) - 1, scale_bits};
  cfg.validate();
  return cfg;
}

RingElement from_signed(int128 v, const FieldConfig& cfg) {
  const int128 f = static_cast<int128>(cfg.modulus);
  int128 r = v % f;
  if (r < 0) r += f;
  return {static_cast<std::uint64_t>(r)};
}

std::int64_t to_signed(RingElement e, const FieldConfig& cfg) {
  if (e.value <= cfg.max_magnitude()) {
    return static_cast<std::int64_t>(e.value);
  }
  return -static_cast<std::int64_t>(cfg.modulus - e.value);
}

std::int64_t to_fixed(double r, const FieldConfig& cfg) {
  const double scaled = std::ldexp(r, cfg.scale_bits);
  const double half = static_cast<double>(cfg.modulus) / 2.0;
  if (!std::isfinite(scaled) || !(std::fabs(scaled) < half)) {
    std::ostringstream msg;
    msg << "value " << r << " outside signed fixed-point range (F="
        << cfg.modulus << ", s=" << cfg.scale_bits << ")";
    throw RangeOverflow(msg.str());
  }
  return std::llround(scaled);
}

RingElement encode(double r, const FieldConfig& cfg) {
  return from_signed(to_fixed(r, cfg), cfg);
}

double decode(RingElement e, const FieldConfig& cfg) {
  return std::ldexp(static_cast<double>(to_signed(e, cfg)), -cfg.scale_bits);
}

RingMatrix::RingMatrix(std::size_t rows, std::size_t cols,
                       std::vector<RingElement> entries)
    : rows_(rows), cols_(cols), entries_(std::move(entries)) {
  if (entries_.size() != rows_ * cols_) {
    throw DimensionMismatch("ring matrix entry count " +
                            std::to_string(entries_.size()) + " != " +
                            std::to_string(rows_) + "x" +
                            std::to_string(cols_));
  }
}

namespace {

void check_same_shape(const RingMatrix& a, const RingMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionMismatch(
        "ring matrix shapes differ: " + std::to_string(a.rows()) + "x" +
        std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
        std::to_string(b.cols()));
  }
}

}  // namespace

void RingMatrix::add_assign(const RingMatrix& other, const FieldConfig& cfg) {
  check_same_shape(*this, other);
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    entries_[i] = ring_add(entries_[i], other.entries_[i], cfg);
  }
}

void RingMatrix::sub_assign(const RingMatrix& other, const FieldConfig& cfg) {
  check_same_shape(*this, other);
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    entries_[i] = ring_sub(entries_[i], other.entries_[i], cfg);
  }
}

}  // namespace ppelm
