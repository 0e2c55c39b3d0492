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

#include "ppelm/bench.hpp"

#include <algorithm>
#include <cstring>
#include <iomanip>
#include <list>
#include <mutex>
#include <ostream>
#include <thread>

#include <json.hpp>

namespace ppelm {

void RunConfig::validate(std::size_t features) const {
  if (hidden < 1) throw ConfigError("hidden nodes must be >= 1");
  if (repetitions < 1) throw ConfigError("repetitions must be >= 1");
  (void)field();  // throws ConfigError for unsupported sizes
  auto check_k = [features](std::size_t k) {
    if (k < 2 || k > features) {
      throw InvalidPartyCount("party count " + std::to_string(k) +
                              " outside 2.." + std::to_string(features));
    }
  };
  check_k(parties);
  if (k_min || k_max) {
    const auto lo = k_min.value_or(2);
    const auto hi = k_max.value_or(features);
    check_k(lo);
    check_k(hi);
    if (lo > hi) throw ConfigError("k-min exceeds k-max");
  }
}

void apply_config_json(RunConfig& cfg, const std::string& json_text) {
  using nlohmann::json;
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  try {
    for (const auto& [raw_key, v] : doc.items()) {
      std::string key = raw_key;
      std::replace(key.begin(), key.end(), '_', '-');
      if (key == "dataset") {
        cfg.dataset = v.get<std::string>();
      } else if (key == "n-features") {
        cfg.n_features = v.get<std::size_t>();
      } else if (key == "data-dir") {
        cfg.data_dir = v.get<std::string>();
      } else if (key == "parties") {
        cfg.parties = v.get<std::size_t>();
      } else if (key == "k-min") {
        cfg.k_min = v.get<std::size_t>();
      } else if (key == "k-max") {
        cfg.k_max = v.get<std::size_t>();
      } else if (key == "hidden") {
        cfg.hidden = v.get<Eigen::Index>();
      } else if (key == "seed") {
        cfg.seed = v.get<std::uint64_t>();
      } else if (key == "activation") {
        cfg.activation = parse_activation(v.get<std::string>());
      } else if (key == "field-bits") {
        cfg.field_bits = v.get<int>();
      } else if (key == "scale-bits") {
        cfg.scale_bits = v.get<int>();
      } else if (key == "field") {
        // {"modulus": F, "scale_bits": s}, as FieldConfig is serialized.
        const auto modulus = v.at("modulus").get<std::uint64_t>();
        int bits = 0;
        while (bits < 64 && ((std::uint64_t{1} << bits) - 1) != modulus) ++bits;
        cfg.field_bits = bits;
        cfg.scale_bits = v.value("scale_bits", cfg.scale_bits);
        (void)cfg.field();
      } else if (key == "transport") {
        cfg.backend = parse_backend(v.get<std::string>());
      } else if (key == "normalize") {
        cfg.normalize = parse_normalize(v.get<std::string>());
      } else if (key == "master-holds-data") {
        cfg.master_holds_data = v.get<bool>();
      } else if (key == "mask-seed") {
        cfg.mask_seed = v.get<std::uint64_t>();
      } else if (key == "repetitions") {
        cfg.repetitions = v.get<std::size_t>();
      } else if (key == "allow-mismatch") {
        cfg.allow_mismatch = v.get<bool>();
      } else if (key == "out") {
        cfg.out = v.get<std::string>();
      } else {
        throw ConfigError("unknown config key '" + raw_key + "'");
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad config value: ") + e.what());
  }
}

bool bit_identical(const Matrix& a, const Matrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         (a.size() == 0 ||
          std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<std::size_t>(a.size())) == 0);
}

namespace {

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

int class_count(const Dataset& ds) {
  return static_cast<int>(std::max<std::size_t>(ds.meta.classes, 2));
}

}  // namespace

Dataset load_for_run(const RunConfig& cfg) {
  if (cfg.dataset.empty()) throw ConfigError("--dataset is required");
  return normalize(resolve_dataset(cfg.dataset, cfg.n_features, cfg.data_dir), cfg.normalize);
}

RunRow evaluate_runs(const RunConfig& cfg, const Dataset& ds, std::size_t k,
                     std::span<const SecureRunResult> results) {
  const auto field = cfg.field();
  const int classes = class_count(ds);
  const ElmModel plain =
      train_fixed_point(ds.x, ds.y, cfg.seed, cfg.hidden, cfg.activation, field, classes);
  const Matrix h_plain =
      activate(decode_matrix(fixed_point_preactivation(ds.x, plain.params, field), field),
               cfg.activation);
  const ElmModel floating = train(ds.x, ds.y, cfg.seed, cfg.hidden, cfg.activation, classes);

  RunRow row;
  row.dataset = ds.name;
  row.k = k;
  row.hidden = cfg.hidden;
  row.seed = cfg.seed;
  row.surrogate = ds.meta.surrogate;
  row.models_identical = !results.empty();
  for (const auto& res : results) {
    row.samples_total.push_back(res.total_seconds);
    row.samples_protocol.push_back(res.protocol_seconds);
    row.samples_solve.push_back(res.solve_seconds);
    row.train_accuracy_secure =
        accuracy(predict_from_scores(res.hidden * res.model.beta), ds.y);
    row.models_identical = row.models_identical && bit_identical(res.model.beta, plain.beta) &&
                           bit_identical(res.hidden, h_plain);
  }
  row.train_accuracy_plain = accuracy(predict_from_scores(h_plain * plain.beta), ds.y);
  row.train_accuracy_float = accuracy(predict(floating, ds.x), ds.y);
  row.models_identical =
      row.models_identical && row.train_accuracy_secure == row.train_accuracy_plain;
  if (!results.empty()) {
    row.wall_time_total = median(row.samples_total);
    row.wall_time_protocol = median(row.samples_protocol);
    row.wall_time_solve = median(row.samples_solve);
  }
  return row;
}

RunRow run_once(const RunConfig& cfg, const Dataset& ds, std::size_t k) {
  const PartitionPlan plan = make_plan(static_cast<std::size_t>(ds.x.cols()), k);
  const auto slices = split_data(ds.x, plan);
  ProtocolOptions options;
  options.backend = cfg.backend;
  options.master_holds_data = cfg.master_holds_data;
  options.mask_seed = cfg.mask_seed;
  std::vector<SecureRunResult> results;
  for (std::size_t rep = 0; rep < cfg.repetitions; ++rep) {
    results.push_back(secure_train(slices, plan, ds.y, cfg.field(), cfg.hidden, cfg.activation,
                                   cfg.seed, options, class_count(ds)));
  }
  return evaluate_runs(cfg, ds, k, results);
}

std::vector<RunRow> run_sweep(const RunConfig& cfg, const Dataset& ds) {
  const auto n = static_cast<std::size_t>(ds.x.cols());
  const auto lo = cfg.k_min.value_or(2);
  const auto hi = cfg.k_max.value_or(n);
  std::vector<RunRow> rows;
  for (std::size_t k = lo; k <= hi; ++k) {
    rows.push_back(run_once(cfg, ds, k));
    if (!rows.back().models_identical && !cfg.allow_mismatch) break;
  }
  return rows;
}

void write_csv(std::ostream& out, const std::vector<RunRow>& rows) {
  out << "dataset,k,L,seed,wall_time_total,wall_time_protocol,wall_time_solve,"
         "train_accuracy_secure,train_accuracy_plain,train_accuracy_float,"
         "models_identical\n";
  for (const auto& r : rows) {
    out << r.dataset << ',' << r.k << ',' << r.hidden << ',' << r.seed << ','
        << std::setprecision(6) << std::scientific << r.wall_time_total << ','
        << r.wall_time_protocol << ',' << r.wall_time_solve << ','
        << std::setprecision(17) << std::defaultfloat << r.train_accuracy_secure << ','
        << r.train_accuracy_plain << ',' << r.train_accuracy_float << ','
        << (r.models_identical ? "true" : "false") << '\n';
  }
}

void write_samples_json(std::ostream& out, const std::vector<RunRow>& rows) {
  nlohmann::json doc = nlohmann::json::array();
  for (const auto& r : rows) {
    doc.push_back({{"dataset", r.dataset},
                   {"k", r.k},
                   {"L", r.hidden},
                   {"seed", r.seed},
                   {"surrogate", r.surrogate},
                   {"wall_time_total", r.samples_total},
                   {"wall_time_protocol", r.samples_protocol},
                   {"wall_time_solve", r.samples_solve},
                   {"models_identical", r.models_identical}});
  }
  out << doc.dump(2) << '\n';
}

// ---------------------------------------------------------------------------

ServeStats serve_party(TcpTransport& transport, const ServeOptions& options,
                       const std::atomic<bool>& stop) {
  const PartyId self = transport.self();
  // Loaded once and shared read-only by every run.
  const Dataset ds = normalize(resolve_dataset(options.data, options.n_features), options.normalize);

  DataSource source = [&ds, self](const SetupMsg& setup) -> Matrix {
    const ColumnRange range = setup.plan.range(self);
    if (static_cast<std::size_t>(ds.x.cols()) == setup.plan.features()) {
      return ds.x.middleCols(static_cast<Eigen::Index>(range.begin),
                             static_cast<Eigen::Index>(range.size()));
    }
    if (static_cast<std::size_t>(ds.x.cols()) == range.size()) return ds.x;
    throw DimensionMismatch("party data has " + std::to_string(ds.x.cols()) +
                            " columns; plan needs " + std::to_string(range.size()) +
                            " (slice) or " + std::to_string(setup.plan.features()) +
                            " (full)");
  };

  std::mutex mu;
  ServeStats stats;
  std::list<std::thread> runs;
  std::size_t started = 0;
  constexpr auto kPoll = std::chrono::milliseconds(200);
  while (!stop.load() && (options.max_runs == 0 || started < options.max_runs)) {
    Frame setup_frame;
    try {
      setup_frame = transport.recv_setup(kPoll);
    } catch (const Timeout&) {
      continue;
    }
    ++started;
    runs.emplace_back([&, setup_frame = std::move(setup_frame)]() mutable {
      PartyId master = 0;
      try {
        master = decode_setup(setup_frame.payload).master_id;
      } catch (const Error&) {
      }
      const RunId run = setup_frame.run_id;
      PartyActor actor(self, master, run, source);
      actor.set_setup_hook([&transport, &options, run](const SetupMsg& setup) {
        for (std::size_t i = 0; i < setup.addresses.size(); ++i) {
          transport.set_run_peer(run, static_cast<PartyId>(i),
                                 HostPort::parse(setup.addresses[i]));
        }
        if (options.master) transport.set_run_peer(run, setup.master_id, *options.master);
      });
      bool ok = false;
      try {
        drive_actor(actor, transport, run, options.timeout, std::move(setup_frame));
        ok = !actor.failed();
      } catch (const std::exception&) {
        ok = false;
      }
      transport.clear_run(run);
      std::lock_guard lock(mu);
      ++(ok ? stats.completed : stats.failed);
    });
  }
  for (auto& t : runs) t.join();
  return stats;
}

}  // namespace ppelm
