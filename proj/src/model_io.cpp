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

#include <fstream>

#include "json.hpp"
#include "ppelm/elm.hpp"

namespace ppelm {

namespace {
constexpr int kModelVersion = 1;
}  // namespace

void save_model(const ElmModel& model, const std::filesystem::path& path) {
  nlohmann::json beta = nlohmann::json::array();
  for (Eigen::Index r = 0; r < model.beta.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < model.beta.cols(); ++c) {
      row.push_back(model.beta(r, c));
    }
    beta.push_back(std::move(row));
  }
  const nlohmann::json doc = {
      {"format", "ppelm-model"},
      {"version", kModelVersion},
      {"seed", model.params.seed},
      {"hidden", model.params.hidden()},
      {"features", model.params.features()},
      {"activation", std::string(to_string(model.params.activation))},
      {"beta", std::move(beta)},
  };
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write model file " + path.string());
  out << doc.dump(1) << '\n';
}

ElmModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open model file " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
    if (doc.at("format") != "ppelm-model") {
      throw ConfigError(path.string() + " is not a ppelm model file");
    }
    if (doc.at("version").get<int>() != kModelVersion) {
      throw ConfigError("unsupported model version " +
                        doc.at("version").dump());
    }
    ElmModel model;
    model.params = init_hidden(doc.at("seed").get<std::uint64_t>(),
                               doc.at("hidden").get<Eigen::Index>(),
                               doc.at("features").get<Eigen::Index>(),
                               parse_activation(doc.at("activation").get<std::string>()));
    const auto& beta = doc.at("beta");
    const auto rows = static_cast<Eigen::Index>(beta.size());
    const auto cols = rows > 0 ? static_cast<Eigen::Index>(beta[0].size()) : 0;
    if (rows != model.params.hidden()) {
      throw DimensionMismatch("beta rows do not match hidden node count");
    }
    model.beta.resize(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
      const auto& row = beta[static_cast<std::size_t>(r)];
      if (static_cast<Eigen::Index>(row.size()) != cols) {
        throw DimensionMismatch("ragged beta matrix in model file");
      }
      for (Eigen::Index c = 0; c < cols; ++c) {
        model.beta(r, c) = row[static_cast<std::size_t>(c)].get<double>();
      }
    }
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("malformed model file " + path.string() + ": " +
                      e.what());
  }
}

}  // namespace ppelm
