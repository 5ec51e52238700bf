// rkd/common/fft.cc
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

#include "rkd/common/fft.h"

#include <cmath>
#include <numbers>

#include "rkd/common/error.h"

namespace rkd {

size_t next_pow2(size_t n) {
  size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

void fft(std::vector<std::complex<double>>& x, bool inverse) {
  const size_t n = x.size();
  if (n == 0 || (n & (n - 1)) != 0)
    throw ShapeError("fft: size must be a nonzero power of two, got " +
                     std::to_string(n));

  // Bit-reversal permutation.
  for (size_t i = 1, j = 0; i < n; ++i) {
    size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(x[i], x[j]);
  }

  for (size_t len = 2; len <= n; len <<= 1) {
    double ang = 2.0 * std::numbers::pi / static_cast<double>(len) *
                 (inverse ? 1.0 : -1.0);
    std::complex<double> wlen(std::cos(ang), std::sin(ang));
    for (size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (size_t k = 0; k < len / 2; ++k) {
        std::complex<double> u = x[i + k];
        std::complex<double> v = x[i + k + len / 2] * w;
        x[i + k] = u + v;
        x[i + k + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
  if (inverse) {
    for (auto& v : x) v /= static_cast<double>(n);
  }
}

std::vector<double> power_spectrum(const std::vector<double>& x, size_t nfft) {
  std::vector<std::complex<double>> buf(nfft, {0.0, 0.0});
  const size_t m = std::min(x.size(), nfft);
  for (size_t i = 0; i < m; ++i) buf[i] = {x[i], 0.0};
  fft(buf);
  std::vector<double> p(nfft / 2 + 1);
  for (size_t i = 0; i < p.size(); ++i) p[i] = std::norm(buf[i]);
  return p;
}

double dominant_frequency_hz(const std::vector<double>& x, int sample_rate,
                             size_t nfft) {
  auto p = power_spectrum(x, nfft);
  size_t best = 0;
  for (size_t i = 1; i < p.size(); ++i)
    if (p[i] > p[best]) best = i;
  return static_cast<double>(best) * sample_rate / static_cast<double>(nfft);
}

}  // namespace rkd
