// rkd/common/rng.h
//
// Copyright 2026  The rkd authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef RKD_COMMON_RNG_H_
#define RKD_COMMON_RNG_H_

#include <cstdint>
#include <string_view>

namespace rkd {

// Deterministic xoshiro256** generator with named substream derivation.
// Every source of randomness in the pipeline is a substream derived from
// (master seed, name[, index]), so stages can be re-run independently
// without perturbing each other, and the distributions do not depend on
// the standard library implementation.
class Rng {
 public:
  explicit Rng(uint64_t seed);

  // Derives an independent child stream from this stream's identity key.
  // Forking does not consume or depend on draws made so far.
  Rng fork(std::string_view name) const;
  Rng fork(std::string_view name, uint64_t index) const;

  static Rng substream(uint64_t seed, std::string_view name) {
    return Rng(seed).fork(name);
  }

  uint64_t next_u64();

  // Uniform in [0, 1).
  double uniform();
  // Uniform in [lo, hi).
  double uniform(double lo, double hi);
  // Uniform integer in [0, n); n must be positive.
  uint64_t uniform_int(uint64_t n);
  // Standard normal via Box-Muller (pairs cached).
  double normal();

  uint64_t key() const { return key_; }

 private:
  void seed_state(uint64_t key);

  uint64_t key_ = 0;
  uint64_t s_[4] = {0, 0, 0, 0};
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// FNV-1a over arbitrary bytes; used for substream keys and config hashes.
uint64_t fnv1a64(const void* data, size_t n, uint64_t seed = 0xcbf29ce484222325ULL);
uint64_t fnv1a64(std::string_view s, uint64_t seed = 0xcbf29ce484222325ULL);

}  // namespace rkd

#endif  // RKD_COMMON_RNG_H_
