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

// libsvm/svmlight loading, normalization and the benchmark dataset registry.

#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ppelm/elm.hpp"

namespace ppelm {

struct DatasetMeta {
  std::size_t instances = 0;
  std::size_t features = 0;
  std::size_t classes = 0;
  std::string source;
  bool surrogate = false;
};

struct Dataset {
  std::string name;
  Matrix x;                // N x n, absent sparse entries are 0
  std::vector<int> y;      // 1..K in order of first appearance
  std::vector<double> label_values;  // original label of class c at c - 1
  DatasetMeta meta;
};

// Parses "label idx:val idx:val ..." lines (1-based indices, '#' comments).
// n is the largest index seen unless `n_features` is given, in which case an
// index beyond it is a ParseError. Throws EmptyFile when no instance is found.
Dataset load_libsvm(const std::string& path,
                    std::optional<std::size_t> n_features = std::nullopt);
Dataset load_libsvm(std::istream& in, const std::string& source,
                    std::optional<std::size_t> n_features = std::nullopt);

// Writes X (zeros omitted) with the original label values.
void write_libsvm(std::ostream& out, const Matrix& x, std::span<const int> y,
                  std::span<const double> label_values);

enum class NormalizeMode { kNone, kMinMax };

NormalizeMode parse_normalize(std::string_view name);
std::string_view to_string(NormalizeMode mode);

// kMinMax maps every column onto [-1, 1]; constant columns become 0.
Dataset normalize(Dataset ds, NormalizeMode mode);

struct TrainTestSplit {
  Dataset train;
  Dataset test;
};

// Seeded shuffle, then the first round(fraction * N) rows train.
TrainTestSplit split_train_test(const Dataset& ds, double train_fraction,
                                std::uint64_t seed);

// ---------------------------------------------------------------------------
// Benchmark registry.

struct KnownDataset {
  std::string_view name;
  std::size_t instances;
  std::size_t features;
  std::size_t classes;
};

inline std::ostream& operator<<(std::ostream& os, const KnownDataset& d) {
  return os << d.name << " (" << d.instances << "x" << d.features << ")";
}

// australian, colon-cancer, diabetes, duke, heart, ionosphere.
std::span<const KnownDataset> known_datasets();
const KnownDataset* find_known(std::string_view name);

// Deterministic two-class libsvm text with the registered shape, used when
// the real file is not available locally.
std::string surrogate_libsvm(const KnownDataset& shape);

// `name_or_path` is a file path, or a registry name looked up as
// <data_dir>/<name>, then $PPELM_DATA_DIR/<name>; failing both, the
// surrogate is loaded and meta.surrogate is set.
Dataset resolve_dataset(const std::string& name_or_path,
                        std::optional<std::size_t> n_features = std::nullopt,
                        const std::string& data_dir = "data");

}  // namespace ppelm
