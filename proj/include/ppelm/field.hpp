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

// Signed fixed-point encoding of reals into Z/FZ and the ring arithmetic the
// secure-sum protocol runs on.
//
// A real r is represented by round(r * 2^s) mod F. Residues in [0, F/2)
// decode as non-negative, residues in [F/2, F) as negative, so addition in the
// ring is exact integer addition as long as every partial sum stays inside
// the signed range.

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "ppelm/errors.hpp"

namespace ppelm {

using int128 = __int128;

inline constexpr std::uint64_t kMersenne61 = (std::uint64_t{1} << 61) - 1;

struct FieldConfig {
  std::uint64_t modulus = kMersenne61;
  int scale_bits = 20;

  // Throws ConfigError unless 2 <= modulus < 2^63, 0 <= scale_bits <= 52 and
  // the signed range holds at least the encoding of 1.0.
  void validate() const;

  // Largest signed magnitude representable: floor((F - 1) / 2).
  std::uint64_t max_magnitude() const { return (modulus - 1) / 2; }

  // 2^bits - 1 for a Mersenne-prime exponent (13, 17, 19, 31 or 61).
  static FieldConfig mersenne(int bits, int scale_bits = 20);

  friend bool operator==(const FieldConfig&, const FieldConfig&) = default;
};

struct RingElement {
  std::uint64_t value = 0;

  friend bool operator==(RingElement, RingElement) = default;
};

// Signed integer -> residue. |v| may exceed F; it is reduced.
RingElement from_signed(int128 v, const FieldConfig& cfg);
// Residue -> signed integer in (-F/2, F/2].
std::int64_t to_signed(RingElement e, const FieldConfig& cfg);

// round(r * 2^s), half away from zero. Throws RangeOverflow when
// |r| * 2^s >= F / 2 or r is not finite.
std::int64_t to_fixed(double r, const FieldConfig& cfg);

RingElement encode(double r, const FieldConfig& cfg);
double decode(RingElement e, const FieldConfig& cfg);

inline RingElement ring_add(RingElement a, RingElement b,
                            const FieldConfig& cfg) {
  std::uint64_t s = a.value + b.value;
  if (s >= cfg.modulus) s -= cfg.modulus;
  return {s};
}

inline RingElement ring_sub(RingElement a, RingElement b,
                            const FieldConfig& cfg) {
  return {a.value >= b.value ? a.value - b.value
                             : a.value + (cfg.modulus - b.value)};
}

inline RingElement ring_neg(RingElement a, const FieldConfig& cfg) {
  return {a.value == 0 ? 0 : cfg.modulus - a.value};
}

// Uniform over [0, F) by rejection sampling on the smallest covering power
// of two.
template <typename Rng>
RingElement ring_uniform_random(Rng& rng, const FieldConfig& cfg) {
  std::uint64_t mask = cfg.modulus - 1;
  mask |= mask >> 1;
  mask |= mask >> 2;
  mask |= mask >> 4;
  mask |= mask >> 8;
  mask |= mask >> 16;
  mask |= mask >> 32;
  for (;;) {
    std::uint64_t v = static_cast<std::uint64_t>(rng()) & mask;
    if (v < cfg.modulus) return {v};
  }
}

// Row-major matrix of residues.
class RingMatrix {
 public:
  RingMatrix() = default;
  RingMatrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), entries_(rows * cols) {}
  RingMatrix(std::size_t rows, std::size_t cols,
             std::vector<RingElement> entries);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return entries_.size(); }

  RingElement& operator()(std::size_t r, std::size_t c) {
    return entries_[r * cols_ + c];
  }
  RingElement operator()(std::size_t r, std::size_t c) const {
    return entries_[r * cols_ + c];
  }

  std::span<RingElement> entries() { return entries_; }
  std::span<const RingElement> entries() const { return entries_; }

  // Element-wise ring addition / subtraction; shapes must agree.
  void add_assign(const RingMatrix& other, const FieldConfig& cfg);
  void sub_assign(const RingMatrix& other, const FieldConfig& cfg);

  template <typename Rng>
  static RingMatrix uniform_random(std::size_t rows, std::size_t cols,
                                   Rng& rng, const FieldConfig& cfg) {
    RingMatrix m(rows, cols);
    for (auto& e : m.entries_) e = ring_uniform_random(rng, cfg);
    return m;
  }

  friend bool operator==(const RingMatrix&, const RingMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<RingElement> entries_;
};

}  // namespace ppelm
