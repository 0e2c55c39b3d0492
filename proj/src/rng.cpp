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

#include "ppelm/rng.hpp"

#include <sodium.h>

#include <stdexcept>

namespace ppelm {
namespace {

void ensure_sodium() {
  if (sodium_init() < 0) {
    throw std::runtime_error("libsodium initialisation failed");
  }
}

constexpr unsigned char kSeedContext[] = "ppelm-chacha-seed";

}  // namespace

ChaChaRng::ChaChaRng(std::uint64_t seed) {
  ensure_sodium();
  unsigned char seed_bytes[8];
  for (int i = 0; i < 8; ++i) {
    seed_bytes[i] = static_cast<unsigned char>(seed >> (8 * i));
  }
  crypto_generichash(key_.data(), key_.size(), seed_bytes, sizeof(seed_bytes),
                     kSeedContext, sizeof(kSeedContext) - 1);
}

ChaChaRng::ChaChaRng(const Key& key) : key_(key) { ensure_sodium(); }

ChaChaRng ChaChaRng::from_entropy() {
  ensure_sodium();
  Key key;
  randombytes_buf(key.data(), key.size());
  return ChaChaRng(key);
}

ChaChaRng::result_type ChaChaRng::operator()() {
  if (pos_ == kBlockWords) {
    refill();
  }
  return block_[pos_++];
}

void ChaChaRng::refill() {
  static constexpr unsigned char kNonce[crypto_stream_chacha20_NONCEBYTES] = {};
  unsigned char bytes[kBlockWords * 8];
  crypto_stream_chacha20_xor_ic(bytes, std::array<unsigned char, sizeof(bytes)>{}.data(),
                                sizeof(bytes), kNonce, counter_, key_.data());
  // 64-byte ChaCha blocks per refill.
  counter_ += sizeof(bytes) / 64;
  for (std::size_t i = 0; i < kBlockWords; ++i) {
    std::uint64_t word = 0;
    for (int b = 7; b >= 0; --b) {
      word = (word << 8) | bytes[i * 8 + static_cast<std::size_t>(b)];
    }
    block_[i] = word;
  }
  pos_ = 0;
}

}  // namespace ppelm
