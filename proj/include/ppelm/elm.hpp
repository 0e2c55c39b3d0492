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

// Plaintext extreme learning machine.
//
// Shapes: X is N x n (instances x features), the hidden weights W are L x n,
// the hidden-layer matrix H is N x L, targets T are N x K and the output
// weights beta are L x K.

#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ppelm/field.hpp"

namespace ppelm {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class Activation { kSign, kSigmoid };

std::string_view to_string(Activation a);
// Accepts "sign" or "sigmoid"; throws ConfigError otherwise.
Activation parse_activation(std::string_view name);

struct HiddenLayerParams {
  Matrix weights;  // L x n
  Vector biases;   // L
  Activation activation = Activation::kSign;
  std::uint64_t seed = 0;

  Eigen::Index hidden() const { return weights.rows(); }
  Eigen::Index features() const { return weights.cols(); }
};

struct ElmModel {
  HiddenLayerParams params;
  // L x K. A single column is the collapsed binary form: class 1 when
  // h(x) * beta >= 0, class 2 otherwise.
  Matrix beta;
};

// Weights and biases i.i.d. uniform on [-1, 1), drawn from mt19937_64(seed)
// in row-major order (W first, then b).
HiddenLayerParams init_hidden(std::uint64_t seed, Eigen::Index hidden,
                              Eigen::Index features, Activation activation);

// X * W^T + 1 b^T. Throws DimensionMismatch when X has the wrong width.
Matrix preactivation(const Matrix& x, const HiddenLayerParams& params);

// Sign maps v >= 0 to +1 and v < 0 to -1.
double activate(double v, Activation activation);
Matrix activate(const Matrix& pre, Activation activation);

// Moore-Penrose inverse through a thin SVD. Singular values at or below
// eps * max(N, L) * sigma_max are treated as zero.
Matrix pseudo_inverse(const Matrix& h);

// N x K matrix of -1 with +1 at column y_i - 1. Labels must be in [1, K].
Matrix one_hot(std::span<const int> labels, int num_classes);

// beta = pinv(H) * one_hot(y).
Matrix solve_output_weights(const Matrix& h, std::span<const int> labels,
                            int num_classes);

// Floating-point training. num_classes = 0 means max(labels).
ElmModel train(const Matrix& x, std::span<const int> labels,
               std::uint64_t seed, Eigen::Index hidden, Activation activation,
               int num_classes = 0);

// Pre-activation computed in fixed-point ring arithmetic: entry (i, j) is
// to_fixed(b_j) + sum_c to_fixed(x_ic * w_jc), reduced mod F. Each product
// term is rounded on its own, so any column partition of the sum gives the
// same integers. Throws RangeOverflow if an entry leaves the signed range.
RingMatrix fixed_point_preactivation(const Matrix& x,
                                     const HiddenLayerParams& params,
                                     const FieldConfig& cfg);

Matrix decode_matrix(const RingMatrix& m, const FieldConfig& cfg);

// Training with the hidden layer evaluated through fixed_point_preactivation.
// This is the baseline the secure protocol reproduces bit for bit.
ElmModel train_fixed_point(const Matrix& x, std::span<const int> labels,
                           std::uint64_t seed, Eigen::Index hidden,
                           Activation activation, const FieldConfig& cfg,
                           int num_classes = 0);

// Output scores h(x) * beta, N x K.
Matrix scores(const ElmModel& model, const Matrix& x);

// Argmax over columns, ties to the lower class. Labels are 1-based.
std::vector<int> predict(const ElmModel& model, const Matrix& x);
// Same decision rule applied to precomputed scores (e.g. H * beta).
std::vector<int> predict_from_scores(const Matrix& s);

double accuracy(std::span<const int> predicted, std::span<const int> truth);

// JSON model file: {"format":"ppelm-model","version":1,"seed","hidden",
// "features","activation","beta":[[...],...]}. Hidden weights are
// regenerated from the seed on load.
void save_model(const ElmModel& model, const std::filesystem::path& path);
ElmModel load_model(const std::filesystem::path& path);

}  // namespace ppelm
