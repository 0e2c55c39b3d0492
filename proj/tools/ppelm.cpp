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

// ppelm: run, sweep, serve-party and split.
//
// Exit status: 0 when every run produced identical secure and plaintext
// models, 1 on a model mismatch, 2 on any error (a JSON object describing the
// error is written to stderr).

#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "ppelm/bench.hpp"

namespace {

using namespace ppelm;

constexpr int kExitMismatch = 1;
constexpr int kExitError = 2;

std::atomic<bool> g_stop{false};

void on_signal(int) { g_stop = true; }

int report_error(const std::string& kind, const std::string& message) {
  nlohmann::json err = {{"error", {{"kind", kind}, {"message", message}}}};
  std::cerr << err.dump() << '\n';
  return kExitError;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// The JSON config is applied before flag parsing so explicit flags win.
void preload_config(int argc, char** argv, RunConfig& cfg) {
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--config" && i + 1 < argc) {
      apply_config_json(cfg, read_file(argv[i + 1]));
    } else if (arg.rfind("--config=", 0) == 0) {
      apply_config_json(cfg, read_file(arg.substr(9)));
    }
  }
}

void add_run_options(CLI::App* app, RunConfig& cfg, std::string& activation,
                     std::string& transport, std::string& norm) {
  app->add_option("--config", "JSON file mirroring these flags");
  app->add_option("--dataset", cfg.dataset,
                  "libsvm file, or a benchmark name (australian, colon-cancer, "
                  "diabetes, duke, heart, ionosphere)");
  app->add_option("--n-features", cfg.n_features, "override n when the file underreports it");
  app->add_option("--data-dir", cfg.data_dir, "where benchmark files are looked up");
  app->add_option("--hidden,-L", cfg.hidden, "hidden nodes")->capture_default_str();
  app->add_option("--seed", cfg.seed, "hidden-layer seed")->capture_default_str();
  app->add_option("--activation", activation, "sign|sigmoid")->capture_default_str();
  app->add_option("--transport", transport, "inproc|tcp")->capture_default_str();
  app->add_option("--field-bits", cfg.field_bits, "F = 2^bits - 1 (13, 17, 19, 31, 61)")
      ->capture_default_str();
  app->add_option("--scale-bits", cfg.scale_bits, "fixed-point fraction bits")
      ->capture_default_str();
  app->add_option("--normalize", norm, "minmax|none")->capture_default_str();
  app->add_flag("--master-holds-data", cfg.master_holds_data,
                "co-locate the master with party 0");
  app->add_option("--mask-seed", cfg.mask_seed, "seed P0's mask RNG (default: OS entropy)");
  app->add_option("--repetitions", cfg.repetitions, "runs per k; median timing reported")
      ->capture_default_str();
  app->add_flag("--allow-mismatch", cfg.allow_mismatch, "exit 0 even if models differ");
  app->add_option("--out", cfg.out, "CSV report path (default stdout)");
}

void finish_config(RunConfig& cfg, const std::string& activation, const std::string& transport,
                   const std::string& norm) {
  cfg.activation = parse_activation(activation);
  cfg.backend = parse_backend(transport);
  cfg.normalize = parse_normalize(norm);
}

int emit_report(const RunConfig& cfg, const std::vector<RunRow>& rows) {
  if (cfg.out.empty()) {
    write_csv(std::cout, rows);
  } else {
    std::ofstream csv(cfg.out);
    if (!csv) throw ConfigError("cannot write " + cfg.out);
    write_csv(csv, rows);
    std::ofstream samples(cfg.out + ".samples.json");
    write_samples_json(samples, rows);
  }
  for (const auto& r : rows) {
    if (r.surrogate) {
      std::cerr << "note: " << r.dataset
                << " is a synthetic stand-in (real file not found; see "
                   "tools/fetch_datasets.sh)\n";
      break;
    }
  }
  const bool all_identical =
      std::all_of(rows.begin(), rows.end(), [](const RunRow& r) { return r.models_identical; });
  if (!all_identical && !cfg.allow_mismatch) {
    std::cerr << nlohmann::json{{"error",
                                 {{"kind", "ModelMismatch"},
                                  {"message", "secure and plaintext models differ"}}}}
                     .dump()
              << '\n';
    return kExitMismatch;
  }
  return 0;
}

RunRow remote_run(const RunConfig& cfg, const Dataset& ds, const std::string& listen,
                  const std::vector<std::string>& parties) {
  const auto k = parties.size();
  const auto field = cfg.field();
  const int classes = static_cast<int>(std::max<std::size_t>(ds.meta.classes, 2));
  const auto plan = make_plan(static_cast<std::size_t>(ds.x.cols()), k);
  TcpTransport transport(static_cast<PartyId>(k), HostPort::parse(listen));
  ProtocolOptions options;
  const auto res = run_remote_master(transport, parties, plan, ds.y,
                                     static_cast<std::size_t>(ds.x.rows()), field, cfg.hidden,
                                     cfg.activation, cfg.seed, options, classes);
  return evaluate_runs(cfg, ds, k, std::span(&res, 1));
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream s(text);
  for (std::string item; std::getline(s, item, ',');) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Privacy-preserving ELM over vertically partitioned data"};
  app.require_subcommand(1);

  RunConfig cfg;
  try {
    preload_config(argc, argv, cfg);
  } catch (const Error& e) {
    return report_error(e.kind(), e.what());
  }
  std::string activation(to_string(cfg.activation));
  std::string transport(to_string(cfg.backend));
  std::string norm(to_string(cfg.normalize));

  auto* run = app.add_subcommand("run", "one secure run checked against plaintext ELM");
  add_run_options(run, cfg, activation, transport, norm);
  run->add_option("--parties,-k", cfg.parties, "party count k")->capture_default_str();
  std::string party_addrs;
  std::string listen;
  std::string model_out;
  run->add_option("--party-addrs", party_addrs,
                  "comma-separated host:port of serve-party processes P0..Pk-1");
  run->add_option("--listen", listen, "master listen address for --party-addrs");
  run->add_option("--model-out", model_out, "write the trained model as JSON");

  auto* sweep = app.add_subcommand("sweep", "run for every k in [k-min, k-max]");
  add_run_options(sweep, cfg, activation, transport, norm);
  sweep->add_option("--k-min", cfg.k_min, "first party count (default 2)");
  sweep->add_option("--k-max", cfg.k_max, "last party count (default n)");

  auto* serve = app.add_subcommand("serve-party", "long-running TCP party");
  PartyId serve_id = 0;
  std::string serve_listen;
  std::string serve_master;
  ServeOptions serve_opts;
  std::string serve_norm = "minmax";
  std::int64_t timeout_ms = kDefaultRecvTimeout.count();
  serve->add_option("--id", serve_id, "party index")->required();
  serve->add_option("--listen", serve_listen, "host:port to listen on")->required();
  serve->add_option("--master", serve_master, "master host:port (overrides SETUP)");
  serve->add_option("--data", serve_opts.data, "full dataset or this party's slice")
      ->required();
  serve->add_option("--n-features", serve_opts.n_features, "override n");
  serve->add_option("--normalize", serve_norm, "minmax|none")->capture_default_str();
  serve->add_option("--timeout-ms", timeout_ms, "receive deadline")->capture_default_str();
  serve->add_option("--max-runs", serve_opts.max_runs, "exit after this many runs (0 = never)")
      ->capture_default_str();

  auto* split = app.add_subcommand("split", "write per-party column slices");
  std::string split_dataset;
  std::size_t split_k = 2;
  std::string split_dir = ".";
  std::string split_norm = "none";
  std::optional<std::size_t> split_n;
  split->add_option("--dataset", split_dataset, "libsvm file or benchmark name")->required();
  split->add_option("--parties,-k", split_k, "party count")->required();
  split->add_option("--out-dir", split_dir, "output directory")->capture_default_str();
  split->add_option("--normalize", split_norm, "minmax|none")->capture_default_str();
  split->add_option("--n-features", split_n, "override n");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    return report_error("UsageError", e.what());
  }

  try {
    if (*run || *sweep) {
      finish_config(cfg, activation, transport, norm);
      const Dataset ds = load_for_run(cfg);
      const auto n = static_cast<std::size_t>(ds.x.cols());
      if (*run) {
        const auto addrs = split_list(party_addrs);
        if (!addrs.empty()) {
          if (listen.empty()) throw ConfigError("--party-addrs needs --listen");
          cfg.parties = addrs.size();
          cfg.validate(n);
          return emit_report(cfg, {remote_run(cfg, ds, listen, addrs)});
        }
        cfg.validate(n);
        auto row = run_once(cfg, ds, cfg.parties);
        if (!model_out.empty()) {
          save_model(train_fixed_point(ds.x, ds.y, cfg.seed, cfg.hidden, cfg.activation,
                                       cfg.field(),
                                       static_cast<int>(std::max<std::size_t>(ds.meta.classes, 2))),
                     model_out);
        }
        return emit_report(cfg, {row});
      }
      if (!cfg.k_min) cfg.k_min = 2;
      if (!cfg.k_max) cfg.k_max = n;
      cfg.parties = *cfg.k_min;
      cfg.validate(n);
      return emit_report(cfg, run_sweep(cfg, ds));
    }
    if (*serve) {
      serve_opts.normalize = parse_normalize(serve_norm);
      serve_opts.timeout = std::chrono::milliseconds(timeout_ms);
      if (!serve_master.empty()) serve_opts.master = HostPort::parse(serve_master);
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      TcpTransport transport_ep(serve_id, HostPort::parse(serve_listen));
      std::cerr << "party " << serve_id << " listening on " << transport_ep.local_address().str()
                << '\n';
      const auto stats = serve_party(transport_ep, serve_opts, g_stop);
      std::cerr << "party " << serve_id << ": " << stats.completed << " run(s) completed, "
                << stats.failed << " failed\n";
      return stats.failed == 0 ? 0 : kExitError;
    }
    if (*split) {
      const Dataset ds =
          normalize(resolve_dataset(split_dataset, split_n), parse_normalize(split_norm));
      const auto plan = make_plan(static_cast<std::size_t>(ds.x.cols()), split_k);
      const auto slices = split_data(ds.x, plan);
      std::filesystem::create_directories(split_dir);
      // Parties never see labels; slices carry a placeholder 0.
      const std::vector<int> placeholder(ds.y.size(), 1);
      const std::vector<double> zero{0.0};
      for (std::size_t p = 0; p < slices.size(); ++p) {
        const auto path = std::filesystem::path(split_dir) / ("party_" + std::to_string(p) + ".libsvm");
        std::ofstream out(path);
        if (!out) throw ConfigError("cannot write " + path.string());
        write_libsvm(out, slices[p], placeholder, zero);
        std::cout << path.string() << " columns " << plan.range(p).begin + 1 << ".."
                  << plan.range(p).end << '\n';
      }
      return 0;
    }
  } catch (const Error& e) {
    return report_error(e.kind(), e.what());
  } catch (const std::exception& e) {
    return report_error("InternalError", e.what());
  }
  return 0;
}
