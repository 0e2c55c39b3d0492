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

// Benchmark driver behind the `ppelm` tool: one secure run checked against
// the plaintext baselines, party-count sweeps, CSV/JSON reports and the
// long-running TCP party server.

#pragma once

#include <atomic>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ppelm/dataset.hpp"
#include "ppelm/protocol.hpp"

namespace ppelm {

struct RunConfig {
  std::string dataset;
  std::optional<std::size_t> n_features;
  std::string data_dir = "data";
  std::size_t parties = 2;
  std::optional<std::size_t> k_min;  // sweep range; defaults 2..n
  std::optional<std::size_t> k_max;
  Eigen::Index hidden = 100;
  std::uint64_t seed = 42;
  Activation activation = Activation::kSigmoid;
  int field_bits = 61;
  int scale_bits = 20;
  Backend backend = Backend::kInProc;
  NormalizeMode normalize = NormalizeMode::kMinMax;
  bool master_holds_data = false;
  std::optional<std::uint64_t> mask_seed;
  std::size_t repetitions = 1;
  bool allow_mismatch = false;
  std::string out;  // CSV path; empty = stdout

  FieldConfig field() const { return FieldConfig::mersenne(field_bits, scale_bits); }
  // Throws ConfigError / InvalidPartyCount.
  void validate(std::size_t features) const;
};

// Overlays the keys present in a JSON object (same names as the CLI flags,
// with '-' or '_') onto `cfg`. Unknown keys are a ConfigError.
void apply_config_json(RunConfig& cfg, const std::string& json_text);

struct RunRow {
  std::string dataset;
  std::size_t k = 0;
  Eigen::Index hidden = 0;
  std::uint64_t seed = 0;
  double wall_time_total = 0;     // median over repetitions
  double wall_time_protocol = 0;
  double wall_time_solve = 0;
  double train_accuracy_secure = 0;
  double train_accuracy_plain = 0;  // fixed-point plaintext baseline
  double train_accuracy_float = 0;  // pure floating-point ELM
  bool models_identical = false;
  bool surrogate = false;
  std::vector<double> samples_total;
  std::vector<double> samples_protocol;
  std::vector<double> samples_solve;
};

// True when both matrices have the same shape and identical bit patterns.
bool bit_identical(const Matrix& a, const Matrix& b);

// Compares secure results (one per repetition) with the fixed-point and
// float baselines recomputed from `ds`.
RunRow evaluate_runs(const RunConfig& cfg, const Dataset& ds, std::size_t k,
                     std::span<const SecureRunResult> results);

// Secure run(s) with `k` parties against the fixed-point and float
// baselines. `ds` must already be normalized.
RunRow run_once(const RunConfig& cfg, const Dataset& ds, std::size_t k);

// One row per k in [k_min, k_max]; stops after the first mismatch unless
// cfg.allow_mismatch.
std::vector<RunRow> run_sweep(const RunConfig& cfg, const Dataset& ds);

// Loads, optionally overrides n and normalizes cfg.dataset.
Dataset load_for_run(const RunConfig& cfg);

void write_csv(std::ostream& out, const std::vector<RunRow>& rows);
// Raw per-repetition timings.
void write_samples_json(std::ostream& out, const std::vector<RunRow>& rows);

// ---------------------------------------------------------------------------
// TCP party server.

struct ServeOptions {
  // Dataset path or name holding either all n columns or only this party's
  // slice; the plan in SETUP selects the columns.
  std::string data;
  std::optional<std::size_t> n_features;
  NormalizeMode normalize = NormalizeMode::kMinMax;
  std::optional<HostPort> master;  // overrides the master's advertised address
  std::chrono::milliseconds timeout = kDefaultRecvTimeout;
  std::size_t max_runs = 0;  // 0 = serve until `stop`
};

struct ServeStats {
  std::size_t completed = 0;
  std::size_t failed = 0;
};

// Accepts SETUP frames on `transport` and runs one PartyActor per run, each
// on its own thread so concurrent runs are demultiplexed by run id.
ServeStats serve_party(TcpTransport& transport, const ServeOptions& options,
                       const std::atomic<bool>& stop);

}  // namespace ppelm
