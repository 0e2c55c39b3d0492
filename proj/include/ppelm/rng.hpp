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

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <limits>

namespace ppelm {

// ChaCha20 keystream generator (libsodium). Satisfies
// UniformRandomBitGenerator. A generator is owned by exactly one party and
// is never shared between threads.
class ChaChaRng {
 public:
  using result_type = std::uint64_t;
  using Key = std::array<std::uint8_t, 32>;

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }

  // Deterministic stream: the key is a BLAKE2b hash of the seed.
  explicit ChaChaRng(std::uint64_t seed);
  explicit ChaChaRng(const Key& key);

  // Keyed from the operating system's entropy source.
  static ChaChaRng from_entropy();

  result_type operator()();

 private:
  static constexpr std::size_t kBlockWords = 64;

  void refill();

  Key key_{};
  std::uint64_t counter_ = 0;
  std::array<std::uint64_t, kBlockWords> block_{};
  std::size_t pos_ = kBlockWords;
};

}  // namespace ppelm
