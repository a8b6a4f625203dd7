/*
 *  Copyright 2026 The toxnet authors
 *
 *  Licensed under the Apache License, Version 2.0 (the "License");
 *  you may not use this file except in compliance with the License.
 *  You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 *  Unless required by applicable law or agreed to in writing, software
 *  distributed under the License is distributed on an "AS IS" BASIS,
 *  WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 *  See the License for the specific language governing permissions and
 *  limitations under the License.
 */

#pragma once

#include <cstdint>
#include <string_view>

namespace toxnet {

// Stable 64-bit hashing used for fingerprint feature identifiers.
//
// Fingerprints must be bit-identical across runs, platforms and compilers, so
// we pin the exact function and byte encoding here instead of relying on
// std::hash:
//
//   * the mixer is FNV-1a with 64-bit parameters
//     (offset basis 14695981039346656037, prime 1099511628211);
//   * integer fields are fed as 8 little-endian bytes each;
//   * signed values are converted with two's complement before encoding.
//
// Tuples are hashed by feeding their fields in order into one accumulator.
// The full encoding of each hashed tuple is documented in docs/formats.md.
class StableHash {
 public:
  static constexpr std::uint64_t kOffsetBasis = 14695981039346656037ULL;
  static constexpr std::uint64_t kPrime = 1099511628211ULL;

  StableHash() = default;

  StableHash& byte(std::uint8_t b) {
    state_ ^= b;
    state_ *= kPrime;
    return *this;
  }

  StableHash& u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      byte(static_cast<std::uint8_t>(v & 0xff));
      v >>= 8;
    }
    return *this;
  }

  StableHash& i64(std::int64_t v) { return u64(static_cast<std::uint64_t>(v)); }

  StableHash& str(std::string_view s) {
    u64(s.size());
    for (char c : s) byte(static_cast<std::uint8_t>(c));
    return *this;
  }

  std::uint64_t digest() const { return state_; }

 private:
  std::uint64_t state_ = kOffsetBasis;
};

/// Seed-derivation mixer (splitmix64 finalizer). Used to derive independent
/// RNG streams from a base seed plus stream tags; not used for fingerprints.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Derives a deterministic sub-seed: mix64 folded over the tags.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t tag_a,
                                 std::uint64_t tag_b = 0, std::uint64_t tag_c = 0) {
  std::uint64_t s = mix64(base);
  s = mix64(s ^ tag_a);
  s = mix64(s ^ tag_b);
  s = mix64(s ^ tag_c);
  return s;
}

}  // namespace toxnet
