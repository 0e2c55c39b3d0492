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

// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero if any fails.

#include <algorithm>
#include <array>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <functional>
#include <iostream>
#include <mutex>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "ppelm/bench.hpp"
#include "ppelm/dataset.hpp"
#include "ppelm/elm.hpp"
#include "ppelm/field.hpp"
#include "ppelm/partition.hpp"
#include "ppelm/protocol.hpp"
#include "support/oracles.hpp"

namespace ppelm {
namespace {

using Clock = std::chrono::steady_clock;

struct Verdict {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string data_dir() {
  const char* env = std::getenv("PPELM_DATA_DIR");
  return env ? env : "data";
}

Dataset load(const std::string& name) {
  return normalize(resolve_dataset(name, std::nullopt, data_dir()), NormalizeMode::kMinMax);
}

std::string tag(const Dataset& ds) { return ds.meta.surrogate ? " [surrogate]" : ""; }

constexpr Eigen::Index kHidden = 100;
constexpr std::uint64_t kSeed = 42;
constexpr Activation kAct = Activation::kSigmoid;

int classes_of(const Dataset& ds) {
  return static_cast<int>(std::max<std::size_t>(ds.meta.classes, 2));
}

// ---------------------------------------------------------------------------

Verdict secure_addition() {
  const auto t0 = Clock::now();
  const std::array<std::uint64_t, 3> moduli = {17, (std::uint64_t{1} << 31) - 1, kMersenne61};
  std::mt19937_64 gen(1);
  ChaChaRng mask_rng(1);
  int bad = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    FieldConfig cfg;
    cfg.modulus = moduli[gen() % moduli.size()];
    cfg.scale_bits = 0;
    const std::size_t k = 2 + gen() % 15;
    std::vector<std::uint64_t> raw(k);
    std::vector<RingElement> values(k);
    for (std::size_t i = 0; i < k; ++i) {
      raw[i] = gen() % cfg.modulus;
      values[i] = {raw[i]};
    }
    if (sma_scalar(values, cfg, mask_rng).value != oracle::big_sum_mod(raw, cfg.modulus)) ++bad;
  }
  const double secs = seconds_since(t0);
  std::ostringstream os;
  os << "1000 instances, " << bad << " mismatches, " << secs << " s (limit 5 s)";
  return {bad == 0 && secs < 5.0, os.str()};
}

std::vector<std::size_t> party_counts(std::size_t n) {
  std::set<std::size_t> ks = {2, 3, (n + 1) / 2, n};
  std::vector<std::size_t> out;
  for (auto k : ks) {
    if (k >= 2 && k <= n) out.push_back(k);
  }
  return out;
}

// Secure run vs fixed-point plaintext training, for every k of interest.
bool model_identity(const Dataset& ds, std::ostream& log) {
  const FieldConfig cfg;
  const int classes = classes_of(ds);
  const ElmModel plain = train_fixed_point(ds.x, ds.y, kSeed, kHidden, kAct, cfg, classes);
  const double plain_acc = accuracy(predict(plain, ds.x), ds.y);
  bool ok = true;
  for (auto k : party_counts(static_cast<std::size_t>(ds.x.cols()))) {
    const auto plan = make_plan(static_cast<std::size_t>(ds.x.cols()), k);
    const auto slices = split_data(ds.x, plan);
    const auto res = secure_train(slices, plan, ds.y, cfg, kHidden, kAct, kSeed, {}, classes);
    const bool same = bit_identical(res.model.beta, plain.beta);
    const double acc = accuracy(predict(res.model, ds.x), ds.y);
    ok = ok && same && acc == plain_acc;
    log << "    " << ds.name << " k=" << k << " beta " << (same ? "identical" : "DIFFERS")
        << ", accuracy " << acc << " vs " << plain_acc << tag(ds) << "\n";
  }
  return ok;
}

Verdict model_equivalence() {
  std::ostringstream log;
  bool ok = true;
  const auto t0 = Clock::now();
  for (const char* name : {"australian", "diabetes", "heart", "ionosphere"}) {
    ok = model_identity(load(name), log) && ok;
  }
  const double fast = seconds_since(t0);
  const auto t1 = Clock::now();
  for (const char* name : {"colon-cancer", "duke"}) {
    ok = model_identity(load(name), log) && ok;
  }
  const double slow = seconds_since(t1);
  std::ostringstream os;
  os << "4 datasets in " << fast << " s (limit 120 s), colon-cancer+duke in " << slow << " s\n"
     << log.str();
  std::string detail = os.str();
  if (!detail.empty() && detail.back() == '\n') detail.pop_back();
  return {ok && fast < 120.0, detail};
}

Verdict partial_sum_identity() {
  const FieldConfig cfg;
  std::mt19937_64 gen(3);
  ChaChaRng rng(3);
  int bad = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const auto n = static_cast<Eigen::Index>(2 + gen() % 11);
    const auto rows = static_cast<Eigen::Index>(1 + gen() % 20);
    const auto hidden = static_cast<Eigen::Index>(1 + gen() % 8);
    const std::size_t k = 2 + gen() % static_cast<std::size_t>(n - 1);
    const Matrix x = oracle::random_matrix(gen, rows, n);
    const auto params = init_hidden(gen(), hidden, n, kAct);
    const auto plan = make_plan(static_cast<std::size_t>(n), k);
    const auto shares = split_weights(params, plan, cfg, rng);
    const auto slices = split_data(x, plan);
    RingMatrix total(static_cast<std::size_t>(rows), static_cast<std::size_t>(hidden));
    for (std::size_t p = 0; p < k; ++p) {
      total.add_assign(
          compute_partial({p, slices[p], shares[p].w_slice, shares[p].b_share}, cfg, k), cfg);
    }
    const auto want = oracle::naive_fixed_preactivation(x, params.weights, params.biases, cfg);
    bool same = true;
    for (std::size_t i = 0; i < want.size(); ++i) {
      same = same && total.entries()[i].value == want[i];
    }
    if (!same) ++bad;
  }
  return {bad == 0, "500 instances, " + std::to_string(bad) + " mismatches"};
}

Verdict penrose_conditions() {
  std::mt19937_64 gen(4);
  double worst = 0;
  int count = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const auto l = static_cast<Eigen::Index>(2 + gen() % 30);
    Eigen::Index rows = l;
    Matrix a;
    switch (trial % 4) {
      case 0:
        rows = l + 1 + static_cast<Eigen::Index>(gen() % 30);
        a = oracle::random_matrix(gen, rows, l);
        break;
      case 1:
        a = oracle::random_matrix(gen, rows, l);
        break;
      case 2:
        rows = 1 + static_cast<Eigen::Index>(gen() % static_cast<std::uint64_t>(l));
        a = oracle::random_matrix(gen, rows, l);
        break;
      default: {
        rows = 2 + static_cast<Eigen::Index>(gen() % 30);
        const auto full = std::min(rows, l);
        const auto rank = 1 + static_cast<Eigen::Index>(gen() % static_cast<std::uint64_t>(full - 1));
        a = oracle::random_matrix(gen, rows, rank) * oracle::random_matrix(gen, rank, l);
        break;
      }
    }
    const Matrix p = pseudo_inverse(a);
    const Matrix ap = a * p;
    const Matrix pa = p * a;
    worst = std::max({worst, oracle::relative_frobenius(ap * a, a),
                      oracle::relative_frobenius(pa * p, p),
                      oracle::relative_frobenius(ap.transpose(), ap),
                      oracle::relative_frobenius(pa.transpose(), pa)});
    ++count;
  }
  std::ostringstream os;
  os << count << " matrices, worst relative residual " << worst << " (limit 1e-8)";
  return {worst <= 1e-8, os.str()};
}

Verdict mask_uniformity() {
  FieldConfig cfg;
  cfg.modulus = 17;
  cfg.scale_bits = 0;
  const double critical = oracle::chi_square_critical(16, 0.01);
  ChaChaRng rng(5);
  double worst = 0;
  int rejected = 0;
  for (std::uint64_t x = 0; x < 17; ++x) {
    std::vector<std::size_t> counts(17, 0);
    for (int draw = 0; draw < 100000; ++draw) {
      ++counts[ring_add({x}, ring_uniform_random(rng, cfg), cfg).value];
    }
    const double stat = oracle::chi_square_uniform(counts);
    worst = std::max(worst, stat);
    if (stat > critical) ++rejected;
  }
  std::ostringstream os;
  os << "17 offsets x 1e5 draws, max chi2 " << worst << " vs critical " << critical
     << " (df 16, alpha 0.01), " << rejected << " rejected";
  return {rejected == 0, os.str()};
}

Verdict partition_rule() {
  std::vector<std::size_t> sizes = make_plan(14, 3).sizes();
  bool ok = sizes == std::vector<std::size_t>{5, 5, 4};
  int bad = 0;
  for (std::size_t n = 2; n <= 64; ++n) {
    for (std::size_t k = 2; k <= n; ++k) {
      const auto s = make_plan(n, k).sizes();
      std::size_t sum = 0;
      for (auto v : s) sum += v;
      const auto [lo, hi] = std::minmax_element(s.begin(), s.end());
      if (s.size() != k || sum != n || *hi - *lo > 1) ++bad;
    }
  }
  ok = ok && bad == 0;
  std::ostringstream os;
  os << "make_plan(14,3) = [" << sizes[0] << "," << sizes[1] << "," << sizes[2]
     << "], exhaustive n<=64: " << bad << " violations";
  return {ok, os.str()};
}

Verdict transport_equivalence() {
  const auto t0 = Clock::now();
  const Dataset ds = load("heart");
  const FieldConfig cfg;
  const auto plan = make_plan(static_cast<std::size_t>(ds.x.cols()), 3);
  const auto slices = split_data(ds.x, plan);
  ProtocolOptions inproc;
  ProtocolOptions tcp;
  tcp.backend = Backend::kTcpLoopback;
  const auto a = secure_train(slices, plan, ds.y, cfg, kHidden, kAct, kSeed, inproc,
                              classes_of(ds));
  const auto b = secure_train(slices, plan, ds.y, cfg, kHidden, kAct, kSeed, tcp,
                              classes_of(ds));
  const double secs = seconds_since(t0);
  const bool same = bit_identical(a.model.beta, b.model.beta) && bit_identical(a.hidden, b.hidden);
  std::ostringstream os;
  os << "heart k=3 tcp vs inproc: " << (same ? "identical" : "DIFFERENT") << ", " << secs
     << " s (limit 30 s)" << tag(ds);
  return {same && secs < 30.0, os.str()};
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(field);
  return out;
}

Verdict sweep_csv() {
  const std::string cmd = std::string("\"") + PPELM_BINARY +
                          "\" sweep --dataset australian --data-dir \"" + data_dir() +
                          "\" 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return {false, "could not start " + std::string(PPELM_BINARY)};
  std::string text;
  std::array<char, 4096> buf{};
  std::size_t got = 0;
  while ((got = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) text.append(buf.data(), got);
  const int status = pclose(pipe);

  std::vector<std::string> lines;
  std::stringstream ss(text);
  for (std::string line; std::getline(ss, line);) {
    if (!line.empty()) lines.push_back(line);
  }
  bool ok = status == 0 && !lines.empty();
  const std::vector<std::string> header = {
      "dataset", "k", "L", "seed", "wall_time_total", "wall_time_protocol", "wall_time_solve",
      "train_accuracy_secure", "train_accuracy_plain", "train_accuracy_float",
      "models_identical"};
  ok = ok && split_csv(lines[0]) == header;
  std::size_t rows = lines.empty() ? 0 : lines.size() - 1;
  for (std::size_t i = 1; ok && i < lines.size(); ++i) {
    const auto f = split_csv(lines[i]);
    if (f.size() != header.size() || f[0] != "australian" || f[1] != std::to_string(i + 1)) {
      ok = false;
      break;
    }
    try {
      for (std::size_t c = 4; c <= 9; ++c) {
        std::size_t used = 0;
        const double v = std::stod(f[c], &used);
        if (used != f[c].size() || v < 0) ok = false;
      }
    } catch (const std::exception&) {
      ok = false;
    }
    ok = ok && (f[10] == "true" || f[10] == "false");
  }
  ok = ok && rows == 13;
  std::ostringstream os;
  os << "exit " << status << ", " << rows << " data rows (want 13, k=2..14)";
  return {ok, os.str()};
}

// Finds `word` (8 bytes, little-endian) at any byte offset of `bytes`.
bool contains_word(std::span<const std::uint8_t> bytes, std::uint64_t word) {
  std::array<std::uint8_t, 8> pat{};
  for (int i = 0; i < 8; ++i) pat[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(word >> (8 * i));
  return std::search(bytes.begin(), bytes.end(), pat.begin(), pat.end()) != bytes.end();
}

std::uint64_t double_bits(double v) {
  std::uint64_t out = 0;
  std::memcpy(&out, &v, sizeof out);
  return out;
}

Verdict no_leak_sentinel() {
  constexpr double kSentinel = 0.123456789;
  const Dataset ds = load("heart");
  const FieldConfig cfg;
  const std::size_t k = 3;
  const auto plan = make_plan(static_cast<std::size_t>(ds.x.cols()), k);
  auto slices = split_data(ds.x, plan);
  slices[1](0, 0) = kSentinel;

  std::mutex mu;
  std::vector<std::vector<std::uint8_t>> wires;
  ProtocolOptions options;
  options.tap = [&](PartyId, PartyId, const Frame&, std::span<const std::uint8_t> wire) {
    std::lock_guard lock(mu);
    wires.emplace_back(wire.begin(), wire.end());
  };
  const auto res =
      secure_train(slices, plan, ds.y, cfg, kHidden, kAct, kSeed, options, classes_of(ds));

  const auto fixed = static_cast<std::uint64_t>(to_fixed(kSentinel, cfg));
  const std::array<std::uint64_t, 3> patterns = {fixed, encode(kSentinel, cfg).value,
                                                 double_bits(kSentinel)};
  std::size_t hits = 0;
  std::size_t bytes = 0;
  for (const auto& w : wires) {
    bytes += w.size();
    for (auto p : patterns) hits += contains_word(w, p) ? 1 : 0;
  }
  // Positive control: the scanner does see payload words that are sent,
  // e.g. a hidden weight shipped to P_1 in SETUP.
  const double shipped = res.model.params.weights(0, static_cast<Eigen::Index>(plan.range(1).begin));
  bool control = false;
  for (const auto& w : wires) control = control || contains_word(w, double_bits(shipped));

  std::ostringstream os;
  os << wires.size() << " frames, " << bytes << " bytes scanned at every offset, " << hits
     << " sentinel hits, control " << (control ? "found" : "MISSING") << tag(ds);
  return {hits == 0 && control && !wires.empty(), os.str()};
}

}  // namespace
}  // namespace ppelm

int main() {
  using namespace ppelm;
  const std::vector<std::pair<int, std::function<Verdict()>>> criteria = {
      {1, secure_addition},      {2, model_equivalence},     {3, partial_sum_identity},
      {4, penrose_conditions},   {5, mask_uniformity},       {6, partition_rule},
      {7, transport_equivalence}, {8, sweep_csv},            {9, no_leak_sentinel},
  };
  int failed = 0;
  for (const auto& [id, check] : criteria) {
    Verdict v;
    try {
      v = check();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    if (!v.pass) ++failed;
    std::cout << "criterion " << id << ": " << (v.pass ? "PASS" : "FAIL") << "  " << v.detail
              << std::endl;
  }
  std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed")
            << std::endl;
  return failed == 0 ? 0 : 1;
}
