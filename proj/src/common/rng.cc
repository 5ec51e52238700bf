// rkd/common/rng.cc
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

#include "rkd/common/rng.h"

#include <cmath>
#include <numbers>

#include "rkd/common/error.h"

namespace rkd {

namespace {

inline uint64_t splitmix64(uint64_t& x) {
  uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace

uint64_t fnv1a64(const void* data, size_t n, uint64_t seed) {
  const auto* p = static_cast<const unsigned char*>(data);
  uint64_t h = seed;
  for (size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

uint64_t fnv1a64(std::string_view s, uint64_t seed) {
  return fnv1a64(s.data(), s.size(), seed);
}

Rng::Rng(uint64_t seed) { seed_state(seed); }

void Rng::seed_state(uint64_t key) {
  key_ = key;
  uint64_t x = key;
  for (auto& s : s_) s = splitmix64(x);
  have_spare_ = false;
}

Rng Rng::fork(std::string_view name) const {
  uint64_t h = fnv1a64(name, key_ ^ 0x9e3779b97f4a7c15ULL);
  return Rng(h);
}

Rng Rng::fork(std::string_view name, uint64_t index) const {
  uint64_t h = fnv1a64(name, key_ ^ 0x9e3779b97f4a7c15ULL);
  h = fnv1a64(&index, sizeof(index), h);
  return Rng(h);
}

uint64_t Rng::next_u64() {
  const uint64_t result = rotl(s_[1] * 5, 7) * 9;
  const uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double Rng::uniform() {
  // 53 random mantissa bits.
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

uint64_t Rng::uniform_int(uint64_t n) {
  if (n == 0) throw ConfigError("uniform_int: n must be positive");
  // Lemire's multiply-shift; the bias is below 2^-64 for desk-scale n.
  unsigned __int128 m = static_cast<unsigned __int128>(next_u64()) * n;
  return static_cast<uint64_t>(m >> 64);
}

double Rng::normal() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  // Box-Muller; u1 in (0,1] avoids log(0).
  double u1 = 1.0 - uniform();
  double u2 = uniform();
  double r = std::sqrt(-2.0 * std::log(u1));
  double a = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(a);
  have_spare_ = true;
  return r * std::cos(a);
}

}  // namespace rkd
