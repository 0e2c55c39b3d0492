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

#include "ppelm/partition.hpp"

namespace ppelm {

PartitionPlan::PartitionPlan(std::vector<ColumnRange> ranges)
    : ranges_(std::move(ranges)) {
  std::size_t next = 0;
  for (const auto& r : ranges_) {
    if (r.begin != next || r.end <= r.begin) {
      throw DimensionMismatch("partition ranges must be contiguous, ordered "
                              "and non-empty");
    }
    next = r.end;
  }
}

std::vector<std::size_t> PartitionPlan::sizes() const {
  std::vector<std::size_t> out;
  out.reserve(ranges_.size());
  for (const auto& r : ranges_) out.push_back(r.size());
  return out;
}

PartitionPlan make_plan(std::size_t features, std::size_t parties) {
  if (parties < 2 || parties > features) {
    throw InvalidPartyCount("party count must satisfy 2 <= k <= n; got k=" +
                            std::to_string(parties) +
                            ", n=" + std::to_string(features));
  }
  const std::size_t base = features / parties;
  const std::size_t extra = features % parties;
  std::vector<ColumnRange> ranges;
  ranges.reserve(parties);
  std::size_t begin = 0;
  for (std::size_t p = 0; p < parties; ++p) {
    const std::size_t width = base + (p < extra ? 1 : 0);
    ranges.push_back({begin, begin + width});
    begin += width;
  }
  return PartitionPlan(std::move(ranges));
}

std::vector<WeightShare> split_weights(const HiddenLayerParams& params,
                                       const PartitionPlan& plan,
                                       const FieldConfig& cfg,
                                       ChaChaRng& rng) {
  if (static_cast<std::size_t>(params.features()) != plan.features()) {
    throw DimensionMismatch("plan covers " + std::to_string(plan.features()) +
                            " columns, W has " +
                            std::to_string(params.features()));
  }
  const auto hidden = static_cast<std::size_t>(params.hidden());
  std::vector<RingElement> remaining(hidden);
  for (std::size_t j = 0; j < hidden; ++j) {
    remaining[j] = encode(params.biases(static_cast<Eigen::Index>(j)), cfg);
  }

  std::vector<WeightShare> out;
  out.reserve(plan.parties());
  for (std::size_t p = 0; p < plan.parties(); ++p) {
    const auto& range = plan.range(p);
    WeightShare share;
    share.party_id = p;
    share.w_slice = params.weights.middleCols(
        static_cast<Eigen::Index>(range.begin),
        static_cast<Eigen::Index>(range.size()));
    if (p + 1 < plan.parties()) {
      share.b_share.resize(hidden);
      for (std::size_t j = 0; j < hidden; ++j) {
        share.b_share[j] = ring_uniform_random(rng, cfg);
        remaining[j] = ring_sub(remaining[j], share.b_share[j], cfg);
      }
    } else {
      share.b_share = remaining;
    }
    out.push_back(std::move(share));
  }
  return out;
}

std::vector<Matrix> split_data(const Matrix& x, const PartitionPlan& plan) {
  if (static_cast<std::size_t>(x.cols()) != plan.features()) {
    throw DimensionMismatch("data has " + std::to_string(x.cols()) +
                            " columns, plan covers " +
                            std::to_string(plan.features()));
  }
  std::vector<Matrix> out;
  out.reserve(plan.parties());
  for (const auto& range : plan.ranges()) {
    out.emplace_back(x.middleCols(static_cast<Eigen::Index>(range.begin),
                                  static_cast<Eigen::Index>(range.size())));
  }
  return out;
}

Matrix join_columns(std::span<const Matrix> slices) {
  if (slices.empty()) return {};
  const auto rows = slices.front().rows();
  Eigen::Index cols = 0;
  for (const auto& s : slices) {
    if (s.rows() != rows) {
      throw DimensionMismatch("slices disagree on row count");
    }
    cols += s.cols();
  }
  Matrix out(rows, cols);
  Eigen::Index at = 0;
  for (const auto& s : slices) {
    out.middleCols(at, s.cols()) = s;
    at += s.cols();
  }
  return out;
}

std::vector<RingElement> reconstruct_bias(std::span<const WeightShare> shares,
                                          const FieldConfig& cfg) {
  if (shares.empty()) return {};
  std::vector<RingElement> sum(shares.front().b_share.size());
  for (const auto& s : shares) {
    if (s.b_share.size() != sum.size()) {
      throw DimensionMismatch("bias shares disagree on length");
    }
    for (std::size_t j = 0; j < sum.size(); ++j) {
      sum[j] = ring_add(sum[j], s.b_share[j], cfg);
    }
  }
  return sum;
}

}  // namespace ppelm
