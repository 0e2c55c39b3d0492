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

#include <future>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "ppelm/bench.hpp"

namespace ppelm {
namespace {

using namespace std::chrono_literals;

RunConfig config_for(const std::string& name) {
  RunConfig cfg;
  cfg.dataset = name;
  cfg.seed = 42;
  cfg.hidden = 100;
  return cfg;
}

TEST(RunOnce, HeartThreePartiesIdentical) {
  const auto cfg = config_for("heart");
  const auto ds = load_for_run(cfg);
  const auto row = run_once(cfg, ds, 3);
  EXPECT_TRUE(row.models_identical);
  EXPECT_EQ(row.train_accuracy_secure, row.train_accuracy_plain);
  EXPECT_NEAR(row.train_accuracy_plain, row.train_accuracy_float, 1e-4);
  EXPECT_GT(row.wall_time_total, 0.0);
}

TEST(RunOnce, SinglePartyRejected) {
  auto cfg = config_for("heart");
  cfg.parties = 1;
  EXPECT_THROW(cfg.validate(13), InvalidPartyCount);
  cfg.parties = 14;
  EXPECT_THROW(cfg.validate(13), InvalidPartyCount);
  cfg.parties = 2;
  cfg.hidden = 0;
  EXPECT_THROW(cfg.validate(13), ConfigError);
}

TEST(RunOnce, OneColumnPerPartyOnIonosphere) {
  const auto cfg = config_for("ionosphere");
  const auto ds = load_for_run(cfg);
  EXPECT_TRUE(run_once(cfg, ds, 34).models_identical);
}

TEST(RunOnce, NonTimingColumnsReproducible) {
  auto cfg = config_for("diabetes");
  const auto ds = load_for_run(cfg);
  const auto a = run_once(cfg, ds, 4);
  cfg.mask_seed = 1234;
  const auto b = run_once(cfg, ds, 4);
  EXPECT_EQ(a.train_accuracy_secure, b.train_accuracy_secure);
  EXPECT_EQ(a.train_accuracy_plain, b.train_accuracy_plain);
  EXPECT_EQ(a.train_accuracy_float, b.train_accuracy_float);
  EXPECT_EQ(a.models_identical, b.models_identical);
}

TEST(Sweep, AustralianTwoToFourteen) {
  const auto cfg = config_for("australian");
  const auto ds = load_for_run(cfg);
  const auto rows = run_sweep(cfg, ds);
  ASSERT_EQ(rows.size(), 13u);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(rows[i].k, i + 2);
    EXPECT_TRUE(rows[i].models_identical);
    EXPECT_GT(rows[i].wall_time_total, 0.0);
    EXPECT_GT(rows[i].wall_time_protocol, 0.0);
  }
  std::ostringstream csv;
  write_csv(csv, rows);
  std::istringstream lines(csv.str());
  std::string line;
  std::getline(lines, line);
  EXPECT_EQ(line,
            "dataset,k,L,seed,wall_time_total,wall_time_protocol,wall_time_solve,"
            "train_accuracy_secure,train_accuracy_plain,train_accuracy_float,models_identical");
  int count = 0;
  while (std::getline(lines, line)) {
    ++count;
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 10);
  }
  EXPECT_EQ(count, 13);
}

TEST(Sweep, RepetitionsReportMedianAndSamples) {
  auto cfg = config_for("heart");
  cfg.repetitions = 5;
  cfg.k_min = 2;
  cfg.k_max = 3;
  const auto ds = load_for_run(cfg);
  const auto rows = run_sweep(cfg, ds);
  ASSERT_EQ(rows.size(), 2u);
  for (const auto& r : rows) {
    ASSERT_EQ(r.samples_total.size(), 5u);
    auto sorted = r.samples_total;
    std::sort(sorted.begin(), sorted.end());
    EXPECT_EQ(r.wall_time_total, sorted[2]);
  }
  std::ostringstream json;
  write_samples_json(json, rows);
  const auto doc = nlohmann::json::parse(json.str());
  ASSERT_EQ(doc.size(), 2u);
  EXPECT_EQ(doc[0]["wall_time_total"].size(), 5u);
  EXPECT_EQ(doc[1]["k"], 3);
}

TEST(Config, JsonMirrorsFlags) {
  RunConfig cfg;
  apply_config_json(cfg, R"({"dataset": "heart", "parties": 4, "hidden": 12, "seed": 9,
      "activation": "sign", "transport": "tcp", "field_bits": 31, "scale-bits": 16,
      "normalize": "none", "k_min": 2, "k_max": 5, "repetitions": 3, "allow_mismatch": true,
      "master_holds_data": true, "mask_seed": 5, "out": "r.csv"})");
  EXPECT_EQ(cfg.dataset, "heart");
  EXPECT_EQ(cfg.parties, 4u);
  EXPECT_EQ(cfg.hidden, 12);
  EXPECT_EQ(cfg.seed, 9u);
  EXPECT_EQ(cfg.activation, Activation::kSign);
  EXPECT_EQ(cfg.backend, Backend::kTcpLoopback);
  EXPECT_EQ(cfg.field().modulus, (std::uint64_t{1} << 31) - 1);
  EXPECT_EQ(cfg.field().scale_bits, 16);
  EXPECT_EQ(cfg.normalize, NormalizeMode::kNone);
  EXPECT_EQ(*cfg.k_max, 5u);
  EXPECT_EQ(cfg.repetitions, 3u);
  EXPECT_TRUE(cfg.allow_mismatch);
  EXPECT_TRUE(cfg.master_holds_data);
  EXPECT_EQ(*cfg.mask_seed, 5u);
  EXPECT_EQ(cfg.out, "r.csv");
}

TEST(Config, FieldObject) {
  RunConfig cfg;
  apply_config_json(cfg, R"({"field": {"modulus": 2305843009213693951, "scale_bits": 18}})");
  EXPECT_EQ(cfg.field_bits, 61);
  EXPECT_EQ(cfg.scale_bits, 18);
  EXPECT_THROW(apply_config_json(cfg, R"({"field": {"modulus": 1000}})"), ConfigError);
}

TEST(Config, Rejections) {
  RunConfig cfg;
  EXPECT_THROW(apply_config_json(cfg, R"({"bogus": 1})"), ConfigError);
  EXPECT_THROW(apply_config_json(cfg, R"({"parties": "many"})"), ConfigError);
  EXPECT_THROW(apply_config_json(cfg, "[1,2]"), ConfigError);
  EXPECT_THROW(apply_config_json(cfg, "{"), ConfigError);
}

TEST(BitIdentical, DistinguishesSignedZero) {
  Matrix a = Matrix::Zero(1, 1);
  Matrix b = a;
  b(0, 0) = -0.0;
  EXPECT_TRUE(bit_identical(a, a));
  EXPECT_FALSE(bit_identical(a, b));
  EXPECT_FALSE(bit_identical(a, Matrix::Zero(1, 2)));
}

// Party servers on loopback with a remote master, including two runs in
// flight at once on the same servers.
TEST(ServeParty, RemoteMasterAndConcurrentRuns) {
  const std::size_t k = 3;
  const auto cfg = config_for("heart");
  const auto ds = load_for_run(cfg);
  std::vector<std::unique_ptr<TcpTransport>> endpoints;
  std::vector<std::string> addresses;
  for (std::size_t p = 0; p < k; ++p) {
    endpoints.push_back(std::make_unique<TcpTransport>(static_cast<PartyId>(p),
                                                       HostPort{"127.0.0.1", 0}));
    addresses.push_back(endpoints.back()->local_address().str());
  }
  std::atomic<bool> stop{false};
  ServeOptions opts;
  opts.data = "heart";
  opts.timeout = 10s;
  opts.max_runs = 2;
  std::vector<std::future<ServeStats>> servers;
  for (auto& ep : endpoints) {
    servers.push_back(std::async(std::launch::async, [&, t = ep.get()] {
      return serve_party(*t, opts, stop);
    }));
  }

  const auto plan = make_plan(static_cast<std::size_t>(ds.x.cols()), k);
  auto master_run = [&](std::uint64_t seed) {
    TcpTransport master(static_cast<PartyId>(k), {"127.0.0.1", 0});
    ProtocolOptions po;
    po.timeout = 10s;
    return run_remote_master(master, addresses, plan, ds.y, static_cast<std::size_t>(ds.x.rows()),
                             cfg.field(), 20, Activation::kSigmoid, seed, po, 2);
  };
  auto first = std::async(std::launch::async, master_run, 1);
  auto second = std::async(std::launch::async, master_run, 2);
  const auto r1 = first.get();
  const auto r2 = second.get();
  for (auto& s : servers) {
    const auto stats = s.get();
    EXPECT_EQ(stats.completed, 2u);
    EXPECT_EQ(stats.failed, 0u);
  }
  const auto base1 = train_fixed_point(ds.x, ds.y, 1, 20, Activation::kSigmoid, cfg.field(), 2);
  const auto base2 = train_fixed_point(ds.x, ds.y, 2, 20, Activation::kSigmoid, cfg.field(), 2);
  EXPECT_TRUE(bit_identical(r1.model.beta, base1.beta));
  EXPECT_TRUE(bit_identical(r2.model.beta, base2.beta));
}

TEST(ServeParty, StopsOnRequest) {
  TcpTransport ep(0, {"127.0.0.1", 0});
  std::atomic<bool> stop{false};
  ServeOptions opts;
  opts.data = "heart";
  auto server = std::async(std::launch::async, [&] { return serve_party(ep, opts, stop); });
  std::this_thread::sleep_for(100ms);
  stop = true;
  const auto stats = server.get();
  EXPECT_EQ(stats.completed + stats.failed, 0u);
}

}  // namespace
}  // namespace ppelm
