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

#include <filesystem>
#include <fstream>
#include <sstream>

#include "ppelm/dataset.hpp"

namespace ppelm {
namespace {

Dataset parse(const std::string& text, std::optional<std::size_t> n = std::nullopt) {
  std::istringstream in(text);
  return load_libsvm(in, "inline", n);
}

TEST(LoadLibsvm, SingleNonzero) {
  const Dataset ds = parse("+1 3:0.5\n");
  ASSERT_EQ(ds.x.rows(), 1);
  ASSERT_EQ(ds.x.cols(), 3);
  EXPECT_EQ(ds.x(0, 0), 0.0);
  EXPECT_EQ(ds.x(0, 1), 0.0);
  EXPECT_EQ(ds.x(0, 2), 0.5);
  EXPECT_EQ(ds.y, std::vector<int>{1});
}

TEST(LoadLibsvm, LabelsRemappedByFirstAppearance) {
  const Dataset ds = parse("-1 1:1\n+1 2:1\n-1 1:2\n3 1:1 # comment\n\n1 2:5\n");
  EXPECT_EQ(ds.y, (std::vector<int>{1, 2, 1, 3, 2}));
  EXPECT_EQ(ds.meta.classes, 3u);
  EXPECT_EQ(ds.label_values, (std::vector<double>{-1.0, 1.0, 3.0}));
}

TEST(LoadLibsvm, DeclaredWidth) {
  const Dataset ds = parse("1 1:1\n2 2:1\n", 5);
  EXPECT_EQ(ds.x.cols(), 5);
  EXPECT_THROW(parse("1 6:1\n", 5), ParseError);
}

TEST(LoadLibsvm, ParseErrorsCarryLine) {
  try {
    parse("1 1:1\n1 2:x\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  EXPECT_THROW(parse("1 0:1\n"), ParseError);
  EXPECT_THROW(parse("1 2:1 1:1\n"), ParseError);
  EXPECT_THROW(parse("abc 1:1\n"), ParseError);
  EXPECT_THROW(parse("1 1-1\n"), ParseError);
}

TEST(LoadLibsvm, EmptyFile) {
  EXPECT_THROW(parse(""), EmptyFile);
  EXPECT_THROW(parse("# only a comment\n\n"), EmptyFile);
}

TEST(LoadLibsvm, DeterministicReload) {
  const std::string text = surrogate_libsvm(*find_known("heart"));
  const Dataset a = parse(text);
  const Dataset b = parse(text);
  EXPECT_EQ(a.x, b.x);
  EXPECT_EQ(a.y, b.y);
}

TEST(LoadLibsvm, WriteReadRoundTrip) {
  const Dataset ds = parse("-1 1:0.25 3:-7\n+1 2:1e-3\n");
  std::ostringstream out;
  write_libsvm(out, ds.x, ds.y, ds.label_values);
  const Dataset back = parse(out.str());
  EXPECT_EQ(back.x, ds.x);
  EXPECT_EQ(back.y, ds.y);
}

TEST(LoadLibsvm, WriterPinsWidthWhenLastColumnIsZero) {
  const Matrix x = Matrix::Zero(2, 4);
  std::ostringstream out;
  write_libsvm(out, x, std::vector<int>{1, 1}, std::vector<double>{0.0});
  EXPECT_EQ(parse(out.str()).x.cols(), 4);
}

TEST(Normalize, ConstantColumnBecomesZero) {
  const Dataset ds = normalize(parse("1 1:5 2:1\n2 1:5 2:3\n"), NormalizeMode::kMinMax);
  EXPECT_EQ(ds.x(0, 0), 0.0);
  EXPECT_EQ(ds.x(1, 0), 0.0);
  EXPECT_EQ(ds.x(0, 1), -1.0);
  EXPECT_EQ(ds.x(1, 1), 1.0);
}

TEST(Normalize, NoneLeavesDataUnchanged) {
  const Dataset ds = parse("1 1:0.5 2:-0.25\n2 1:0.1\n");
  EXPECT_EQ(normalize(ds, NormalizeMode::kNone).x, ds.x);
}

TEST(Normalize, ColumnScanOracle) {
  const Dataset ds = normalize(resolve_dataset("ionosphere"), NormalizeMode::kMinMax);
  for (Eigen::Index j = 0; j < ds.x.cols(); ++j) {
    const double lo = ds.x.col(j).minCoeff();
    const double hi = ds.x.col(j).maxCoeff();
    if (lo == 0.0 && hi == 0.0) continue;  // constant column
    EXPECT_NEAR(lo, -1.0, 1e-12);
    EXPECT_NEAR(hi, 1.0, 1e-12);
  }
}

TEST(Normalize, ParseModes) {
  EXPECT_EQ(parse_normalize("minmax"), NormalizeMode::kMinMax);
  EXPECT_EQ(parse_normalize("none"), NormalizeMode::kNone);
  EXPECT_THROW(parse_normalize("zscore"), ConfigError);
}

TEST(Split, SeededSeventyThirty) {
  const Dataset ds = resolve_dataset("heart");
  const auto a = split_train_test(ds, 0.7, 5);
  const auto b = split_train_test(ds, 0.7, 5);
  EXPECT_EQ(a.train.x.rows(), 189);
  EXPECT_EQ(a.test.x.rows(), 81);
  EXPECT_EQ(a.train.x, b.train.x);
  EXPECT_EQ(a.test.y, b.test.y);
  EXPECT_THROW(split_train_test(ds, 1.0, 5), ConfigError);
}

class TableShapes : public ::testing::TestWithParam<KnownDataset> {};

// Surrogates always reproduce the registered shape.
TEST_P(TableShapes, SurrogateShape) {
  const auto& shape = GetParam();
  std::istringstream in(surrogate_libsvm(shape));
  const Dataset ds = load_libsvm(in, "surrogate", shape.features);
  EXPECT_EQ(static_cast<std::size_t>(ds.x.rows()), shape.instances);
  EXPECT_EQ(static_cast<std::size_t>(ds.x.cols()), shape.features);
  EXPECT_EQ(ds.meta.classes, shape.classes);
}

// The real files, when present, must match the registered shape.
TEST_P(TableShapes, RealFileShape) {
  const auto& shape = GetParam();
  const Dataset ds = resolve_dataset(std::string(shape.name));
  if (ds.meta.surrogate) GTEST_SKIP() << shape.name << " not available locally";
  EXPECT_EQ(static_cast<std::size_t>(ds.x.rows()), shape.instances);
  EXPECT_EQ(static_cast<std::size_t>(ds.x.cols()), shape.features);
  EXPECT_EQ(ds.meta.classes, shape.classes);
}

INSTANTIATE_TEST_SUITE_P(Benchmarks, TableShapes, ::testing::ValuesIn(known_datasets().begin(),
                                                                      known_datasets().end()),
                         [](const auto& info) {
                           std::string n(info.param.name);
                           std::replace(n.begin(), n.end(), '-', '_');
                           return n;
                         });

TEST(Resolve, PrefersLocalFile) {
  const auto dir = std::filesystem::temp_directory_path() / "ppelm_resolve_test";
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "heart");
    out << "+1 1:1 13:2\n-1 2:1\n";
  }
  const Dataset ds = resolve_dataset("heart", std::nullopt, dir.string());
  std::filesystem::remove_all(dir);
  EXPECT_FALSE(ds.meta.surrogate);
  EXPECT_EQ(ds.x.rows(), 2);
  EXPECT_EQ(ds.x.cols(), 13);
}

TEST(Resolve, UnknownName) { EXPECT_THROW(resolve_dataset("no-such-set"), ConfigError); }

}  // namespace
}  // namespace ppelm
