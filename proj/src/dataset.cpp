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

#include "ppelm/dataset.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <random>
#include <sstream>

#include "ppelm/errors.hpp"

namespace ppelm {
namespace {

struct Entry {
  std::size_t row;
  std::size_t col;  // 0-based
  double value;
};

double parse_double(std::string_view token, std::size_t line, const char* what) {
  if (!token.empty() && token.front() == '+') token.remove_prefix(1);
  double v = 0;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (ec != std::errc() || ptr != token.data() + token.size() || !std::isfinite(v)) {
    throw ParseError(line, std::string("bad ") + what + " '" + std::string(token) + "'");
  }
  return v;
}

std::string_view next_token(std::string_view& rest) {
  const auto start = rest.find_first_not_of(" \t\r");
  if (start == std::string_view::npos) {
    rest = {};
    return {};
  }
  rest.remove_prefix(start);
  const auto end = rest.find_first_of(" \t\r");
  const auto token = rest.substr(0, end);
  rest.remove_prefix(end == std::string_view::npos ? rest.size() : end);
  return token;
}

}  // namespace

Dataset load_libsvm(std::istream& in, const std::string& source,
                    std::optional<std::size_t> n_features) {
  std::vector<Entry> entries;
  std::vector<double> raw_labels;
  std::size_t max_index = 0;
  std::string text;
  std::size_t line_no = 0;
  while (std::getline(in, text)) {
    ++line_no;
    std::string_view rest(text);
    if (const auto hash = rest.find('#'); hash != std::string_view::npos) {
      rest = rest.substr(0, hash);
    }
    const auto label = next_token(rest);
    if (label.empty()) continue;
    const std::size_t row = raw_labels.size();
    raw_labels.push_back(parse_double(label, line_no, "label"));
    std::size_t last = 0;
    for (auto tok = next_token(rest); !tok.empty(); tok = next_token(rest)) {
      const auto colon = tok.find(':');
      if (colon == std::string_view::npos) {
        throw ParseError(line_no, "expected idx:val, got '" + std::string(tok) + "'");
      }
      std::size_t idx = 0;
      const auto idx_text = tok.substr(0, colon);
      auto [ptr, ec] = std::from_chars(idx_text.data(), idx_text.data() + idx_text.size(), idx);
      if (ec != std::errc() || ptr != idx_text.data() + idx_text.size() || idx == 0) {
        throw ParseError(line_no, "bad feature index '" + std::string(idx_text) + "'");
      }
      if (idx <= last) {
        throw ParseError(line_no, "feature indices must be strictly increasing");
      }
      if (n_features && idx > *n_features) {
        throw ParseError(line_no, "feature index " + std::to_string(idx) +
                                      " exceeds declared n=" + std::to_string(*n_features));
      }
      last = idx;
      max_index = std::max(max_index, idx);
      const double v = parse_double(tok.substr(colon + 1), line_no, "feature value");
      if (v != 0.0) entries.push_back({row, idx - 1, v});
    }
  }
  if (raw_labels.empty()) throw EmptyFile(source);

  Dataset ds;
  ds.name = std::filesystem::path(source).stem().string();
  const std::size_t n = n_features.value_or(max_index);
  if (n == 0) throw ParseError(line_no, "no features in " + source);
  ds.x = Matrix::Zero(static_cast<Eigen::Index>(raw_labels.size()),
                      static_cast<Eigen::Index>(n));
  for (const auto& e : entries) {
    ds.x(static_cast<Eigen::Index>(e.row), static_cast<Eigen::Index>(e.col)) = e.value;
  }
  ds.y.reserve(raw_labels.size());
  for (double label : raw_labels) {
    auto it = std::find(ds.label_values.begin(), ds.label_values.end(), label);
    if (it == ds.label_values.end()) {
      ds.label_values.push_back(label);
      it = ds.label_values.end() - 1;
    }
    ds.y.push_back(static_cast<int>(it - ds.label_values.begin()) + 1);
  }
  ds.meta = {raw_labels.size(), n, ds.label_values.size(), source, false};
  return ds;
}

Dataset load_libsvm(const std::string& path, std::optional<std::size_t> n_features) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open dataset " + path);
  return load_libsvm(in, path, n_features);
}

void write_libsvm(std::ostream& out, const Matrix& x, std::span<const int> y,
                  std::span<const double> label_values) {
  if (y.size() != static_cast<std::size_t>(x.rows())) {
    throw DimensionMismatch("label count does not match rows");
  }
  out << std::setprecision(17);
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const int c = y[static_cast<std::size_t>(r)];
    out << (c >= 1 && static_cast<std::size_t>(c) <= label_values.size()
                ? label_values[static_cast<std::size_t>(c - 1)]
                : static_cast<double>(c));
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      // The first row always lists the last column so n survives reloading.
      const bool pin = r == 0 && j + 1 == x.cols();
      if (x(r, j) != 0.0 || pin) out << ' ' << (j + 1) << ':' << x(r, j);
    }
    out << '\n';
  }
}

NormalizeMode parse_normalize(std::string_view name) {
  if (name == "minmax") return NormalizeMode::kMinMax;
  if (name == "none") return NormalizeMode::kNone;
  throw ConfigError("unknown normalize mode '" + std::string(name) +
                    "' (expected minmax|none)");
}

std::string_view to_string(NormalizeMode mode) {
  return mode == NormalizeMode::kMinMax ? "minmax" : "none";
}

Dataset normalize(Dataset ds, NormalizeMode mode) {
  if (ds.x.cols() < 1) throw DimensionMismatch("cannot normalize a dataset without features");
  if (mode == NormalizeMode::kNone) return ds;
  for (Eigen::Index j = 0; j < ds.x.cols(); ++j) {
    auto col = ds.x.col(j);
    const double lo = col.minCoeff();
    const double hi = col.maxCoeff();
    if (hi == lo) {
      col.setZero();
      continue;
    }
    const double span = hi - lo;
    for (Eigen::Index i = 0; i < col.size(); ++i) {
      // Pin the extremes so rounding cannot push them past +-1.
      if (col(i) == lo) {
        col(i) = -1.0;
      } else if (col(i) == hi) {
        col(i) = 1.0;
      } else {
        col(i) = std::clamp(2.0 * (col(i) - lo) / span - 1.0, -1.0, 1.0);
      }
    }
  }
  return ds;
}

TrainTestSplit split_train_test(const Dataset& ds, double train_fraction,
                                std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw ConfigError("train fraction must be in (0, 1)");
  }
  const auto n = static_cast<std::size_t>(ds.x.rows());
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 gen(seed);
  std::shuffle(order.begin(), order.end(), gen);
  const auto cut = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(n)));

  auto take = [&](std::size_t first, std::size_t last, const char* suffix) {
    Dataset part;
    part.name = ds.name + suffix;
    part.label_values = ds.label_values;
    part.x.resize(static_cast<Eigen::Index>(last - first), ds.x.cols());
    for (std::size_t i = first; i < last; ++i) {
      part.x.row(static_cast<Eigen::Index>(i - first)) =
          ds.x.row(static_cast<Eigen::Index>(order[i]));
      part.y.push_back(ds.y[order[i]]);
    }
    part.meta = ds.meta;
    part.meta.instances = last - first;
    return part;
  };
  return {take(0, cut, "-train"), take(cut, n, "-test")};
}

// ---------------------------------------------------------------------------

namespace {

constexpr std::array<KnownDataset, 6> kKnown{{
    {"australian", 690, 14, 2},
    {"colon-cancer", 62, 2000, 2},
    {"diabetes", 768, 8, 2},
    {"duke", 44, 7129, 2},
    {"heart", 270, 13, 2},
    {"ionosphere", 351, 34, 2},
}};

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace

std::span<const KnownDataset> known_datasets() { return kKnown; }

const KnownDataset* find_known(std::string_view name) {
  for (const auto& k : kKnown) {
    if (k.name == name) return &k;
  }
  return nullptr;
}

std::string surrogate_libsvm(const KnownDataset& shape) {
  std::mt19937_64 gen(fnv1a(shape.name));
  auto uniform = [&gen] { return std::ldexp(static_cast<double>(gen() >> 11), -53); };
  auto normal = [&] {
    // Box-Muller; avoids the implementation-defined std::normal_distribution.
    const double u = 1.0 - uniform();
    return std::sqrt(-2.0 * std::log(u)) * std::cos(2.0 * 3.14159265358979323846 * uniform());
  };

  // Per-column raw offset and scale; a subset of columns carries the class
  // signal so the problem is learnable but not trivially separable.
  const std::size_t informative =
      std::max<std::size_t>(1, std::min<std::size_t>(shape.features / 3, 40));
  std::vector<double> offset(shape.features), scale(shape.features), shift(shape.features, 0.0);
  std::vector<bool> sparse(shape.features);
  for (std::size_t j = 0; j < shape.features; ++j) {
    offset[j] = std::round((uniform() * 20.0 - 10.0) * 100.0) / 100.0;
    scale[j] = 0.5 + uniform() * 4.5;
    sparse[j] = uniform() < 0.15;
  }
  for (std::size_t m = 0; m < informative; ++m) {
    const auto j = static_cast<std::size_t>(gen() % shape.features);
    shift[j] = (uniform() < 0.5 ? -1.0 : 1.0) * (0.15 + 0.35 * uniform());
  }

  std::ostringstream out;
  out << std::setprecision(8);
  for (std::size_t i = 0; i < shape.instances; ++i) {
    const double y = uniform() < 0.55 ? 1.0 : -1.0;
    const bool flipped = uniform() < 0.08;  // label noise
    out << ((y > 0) != flipped ? "+1" : "-1");
    for (std::size_t j = 0; j < shape.features; ++j) {
      if (sparse[j] && uniform() < 0.5) continue;
      const double v = offset[j] + scale[j] * (normal() + y * shift[j]);
      if (v != 0.0) out << ' ' << (j + 1) << ':' << v;
    }
    out << '\n';
  }
  return out.str();
}

Dataset resolve_dataset(const std::string& name_or_path,
                        std::optional<std::size_t> n_features,
                        const std::string& data_dir) {
  namespace fs = std::filesystem;
  if (fs::is_regular_file(name_or_path)) return load_libsvm(name_or_path, n_features);

  const KnownDataset* known = find_known(name_or_path);
  if (known == nullptr) {
    throw ConfigError("dataset '" + name_or_path +
                      "' is neither a file nor a known benchmark name");
  }
  const auto n = n_features.value_or(known->features);
  std::vector<fs::path> candidates{fs::path(data_dir) / name_or_path};
  if (const char* env = std::getenv("PPELM_DATA_DIR"); env != nullptr && *env != '\0') {
    candidates.emplace_back(fs::path(env) / name_or_path);
  }
  for (const auto& p : candidates) {
    if (fs::is_regular_file(p)) {
      Dataset ds = load_libsvm(p.string(), n);
      ds.name = name_or_path;
      return ds;
    }
  }
  std::istringstream text(surrogate_libsvm(*known));
  Dataset ds = load_libsvm(text, "surrogate:" + name_or_path, n);
  ds.name = name_or_path;
  ds.meta.surrogate = true;
  return ds;
}

}  // namespace ppelm
