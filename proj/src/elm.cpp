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

#include "ppelm/elm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace ppelm {

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::kSign:
      return "sign";
    case Activation::kSigmoid:
      return "sigmoid";
  }
  return "unknown";
}

Activation parse_activation(std::string_view name) {
  if (name == "sign") return Activation::kSign;
  if (name == "sigmoid") return Activation::kSigmoid;
  throw ConfigError("unknown activation '" + std::string(name) +
                    "' (expected sign|sigmoid)");
}

HiddenLayerParams init_hidden(std::uint64_t seed, Eigen::Index hidden,
                              Eigen::Index features, Activation activation) {
  if (hidden < 1 || features < 1) {
    throw DimensionMismatch("hidden layer needs L >= 1 and n >= 1, got L=" +
                            std::to_string(hidden) +
                            " n=" + std::to_string(features));
  }
  std::mt19937_64 gen(seed);
  // 53 random mantissa bits -> [0, 1) -> [-1, 1).
  auto draw = [&gen] {
    return std::ldexp(static_cast<double>(gen() >> 11), -53) * 2.0 - 1.0;
  };
  HiddenLayerParams p;
  p.weights.resize(hidden, features);
  for (Eigen::Index r = 0; r < hidden; ++r) {
    for (Eigen::Index c = 0; c < features; ++c) p.weights(r, c) = draw();
  }
  p.biases.resize(hidden);
  for (Eigen::Index r = 0; r < hidden; ++r) p.biases(r) = draw();
  p.activation = activation;
  p.seed = seed;
  return p;
}

namespace {

void check_width(const Matrix& x, const HiddenLayerParams& params) {
  if (x.cols() != params.features()) {
    throw DimensionMismatch("data has " + std::to_string(x.cols()) +
                            " features, hidden layer expects " +
                            std::to_string(params.features()));
  }
}

int resolve_classes(std::span<const int> labels, int num_classes) {
  if (labels.empty()) throw DimensionMismatch("no training labels");
  const int max_label = *std::max_element(labels.begin(), labels.end());
  return num_classes > 0 ? num_classes : max_label;
}

}  // namespace

Matrix preactivation(const Matrix& x, const HiddenLayerParams& params) {
  check_width(x, params);
  Matrix out = x * params.weights.transpose();
  out.rowwise() += params.biases.transpose();
  return out;
}

double activate(double v, Activation activation) {
  switch (activation) {
    case Activation::kSign:
      return v >= 0.0 ? 1.0 : -1.0;
    case Activation::kSigmoid:
      return 1.0 / (1.0 + std::exp(-v));
  }
  return v;
}

Matrix activate(const Matrix& pre, Activation activation) {
  return pre.unaryExpr([activation](double v) { return activate(v, activation); });
}

Matrix pseudo_inverse(const Matrix& h) {
  Eigen::BDCSVD<Matrix> svd(h, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success) {
    throw ConvergenceFailure("SVD did not converge on " +
                             std::to_string(h.rows()) + "x" +
                             std::to_string(h.cols()) + " matrix");
  }
  const Vector& sigma = svd.singularValues();
  Vector inv = Vector::Zero(sigma.size());
  if (sigma.size() > 0) {
    const double tol = std::numeric_limits<double>::epsilon() *
                       static_cast<double>(std::max(h.rows(), h.cols())) *
                       sigma(0);
    for (Eigen::Index i = 0; i < sigma.size(); ++i) {
      if (sigma(i) > tol) inv(i) = 1.0 / sigma(i);
    }
  }
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

Matrix one_hot(std::span<const int> labels, int num_classes) {
  Matrix t = Matrix::Constant(static_cast<Eigen::Index>(labels.size()),
                              num_classes, -1.0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int y = labels[i];
    if (y < 1 || y > num_classes) {
      throw DimensionMismatch("label " + std::to_string(y) +
                              " outside [1, " + std::to_string(num_classes) +
                              "]");
    }
    t(static_cast<Eigen::Index>(i), y - 1) = 1.0;
  }
  return t;
}

Matrix solve_output_weights(const Matrix& h, std::span<const int> labels,
                            int num_classes) {
  if (h.rows() != static_cast<Eigen::Index>(labels.size())) {
    throw DimensionMismatch("hidden matrix has " + std::to_string(h.rows()) +
                            " rows but " + std::to_string(labels.size()) +
                            " labels");
  }
  return pseudo_inverse(h) * one_hot(labels, num_classes);
}

ElmModel train(const Matrix& x, std::span<const int> labels,
               std::uint64_t seed, Eigen::Index hidden, Activation activation,
               int num_classes) {
  const int classes = resolve_classes(labels, num_classes);
  ElmModel model;
  model.params = init_hidden(seed, hidden, x.cols(), activation);
  const Matrix h = activate(preactivation(x, model.params), activation);
  model.beta = solve_output_weights(h, labels, classes);
  return model;
}

RingMatrix fixed_point_preactivation(const Matrix& x,
                                     const HiddenLayerParams& params,
                                     const FieldConfig& cfg) {
  check_width(x, params);
  const auto n = x.rows();
  const auto hidden = params.hidden();
  const auto features = params.features();
  const int128 limit = static_cast<int128>(cfg.max_magnitude());
  RingMatrix out(static_cast<std::size_t>(n), static_cast<std::size_t>(hidden));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < hidden; ++j) {
      int128 acc = to_fixed(params.biases(j), cfg);
      for (Eigen::Index c = 0; c < features; ++c) {
        acc += to_fixed(x(i, c) * params.weights(j, c), cfg);
      }
      if (acc > limit || acc < -limit) {
        throw RangeOverflow("pre-activation (" + std::to_string(i) + ", " +
                            std::to_string(j) +
                            ") exceeds the signed fixed-point range");
      }
      out(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) =
          from_signed(acc, cfg);
    }
  }
  return out;
}

Matrix decode_matrix(const RingMatrix& m, const FieldConfig& cfg) {
  Matrix out(static_cast<Eigen::Index>(m.rows()),
             static_cast<Eigen::Index>(m.cols()));
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) {
      out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          decode(m(r, c), cfg);
    }
  }
  return out;
}

ElmModel train_fixed_point(const Matrix& x, std::span<const int> labels,
                           std::uint64_t seed, Eigen::Index hidden,
                           Activation activation, const FieldConfig& cfg,
                           int num_classes) {
  const int classes = resolve_classes(labels, num_classes);
  ElmModel model;
  model.params = init_hidden(seed, hidden, x.cols(), activation);
  const Matrix pre =
      decode_matrix(fixed_point_preactivation(x, model.params, cfg), cfg);
  model.beta = solve_output_weights(activate(pre, activation), labels, classes);
  return model;
}

Matrix scores(const ElmModel& model, const Matrix& x) {
  const Matrix h =
      activate(preactivation(x, model.params), model.params.activation);
  if (h.cols() != model.beta.rows()) {
    throw DimensionMismatch("beta has " + std::to_string(model.beta.rows()) +
                            " rows, hidden layer has " +
                            std::to_string(h.cols()) + " nodes");
  }
  return h * model.beta;
}

std::vector<int> predict(const ElmModel& model, const Matrix& x) {
  return predict_from_scores(scores(model, x));
}

std::vector<int> predict_from_scores(const Matrix& s) {
  std::vector<int> out(static_cast<std::size_t>(s.rows()));
  for (Eigen::Index i = 0; i < s.rows(); ++i) {
    if (s.cols() == 1) {
      out[static_cast<std::size_t>(i)] = s(i, 0) >= 0.0 ? 1 : 2;
      continue;
    }
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < s.cols(); ++c) {
      if (s(i, c) > s(i, best)) best = c;
    }
    out[static_cast<std::size_t>(i)] = static_cast<int>(best) + 1;
  }
  return out;
}

double accuracy(std::span<const int> predicted, std::span<const int> truth) {
  if (predicted.size() != truth.size()) {
    throw DimensionMismatch("prediction/label length mismatch");
  }
  if (truth.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    hits += predicted[i] == truth[i] ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

}  // namespace ppelm
