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

// Vertical partitioning of feature columns, hidden weights and biases across
// k parties.

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ppelm/elm.hpp"
#include "ppelm/field.hpp"
#include "ppelm/rng.hpp"

namespace ppelm {

// Half-open, zero-based column interval [begin, end).
struct ColumnRange {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - begin; }

  friend bool operator==(const ColumnRange&, const ColumnRange&) = default;
};

class PartitionPlan {
 public:
  PartitionPlan() = default;

  // Builds a plan from contiguous ranges. Throws DimensionMismatch unless the
  // ranges are non-empty, ordered, disjoint and start at column 0.
  explicit PartitionPlan(std::vector<ColumnRange> ranges);

  std::size_t parties() const { return ranges_.size(); }
  std::size_t features() const { return ranges_.empty() ? 0 : ranges_.back().end; }
  const ColumnRange& range(std::size_t party) const { return ranges_.at(party); }
  const std::vector<ColumnRange>& ranges() const { return ranges_; }
  std::vector<std::size_t> sizes() const;

  friend bool operator==(const PartitionPlan&, const PartitionPlan&) = default;

 private:
  std::vector<ColumnRange> ranges_;
};

// Ceil-first split: the first (n mod k) parties get ceil(n/k) columns, the
// rest floor(n/k). Throws InvalidPartyCount unless 2 <= k <= n.
PartitionPlan make_plan(std::size_t features, std::size_t parties);

// What the master hands a party at setup.
struct WeightShare {
  std::size_t party_id = 0;
  Matrix w_slice;                     // L x n_i
  std::vector<RingElement> b_share;   // L, additive share of encode(b)
};

// Everything a party holds once setup is complete. x_slice is private and
// never serialized.
struct PartyShare {
  std::size_t party_id = 0;
  Matrix x_slice;  // N x n_i
  Matrix w_slice;  // L x n_i
  std::vector<RingElement> b_share;
};

// W column slices aligned with the plan plus bias shares: parties 0..k-2
// receive uniform ring elements, the last party receives
// encode(b) - sum(earlier shares).
std::vector<WeightShare> split_weights(const HiddenLayerParams& params,
                                       const PartitionPlan& plan,
                                       const FieldConfig& cfg,
                                       ChaChaRng& rng);

std::vector<Matrix> split_data(const Matrix& x, const PartitionPlan& plan);

// Column-wise concatenation; the inverse of split_data / W slicing.
Matrix join_columns(std::span<const Matrix> slices);

// Ring sum of all parties' bias shares.
std::vector<RingElement> reconstruct_bias(std::span<const WeightShare> shares,
                                          const FieldConfig& cfg);

}  // namespace ppelm
