// rkd/speech/features.cc
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

#include "rkd/speech/features.h"

#include <cmath>
#include <complex>
#include <numbers>

#include "rkd/common/error.h"
#include "rkd/common/fft.h"

namespace rkd {

namespace {

constexpr int kWindow = 128;
constexpr int kHop = 64;

double hz_to_mel(double f) { return 2595.0 * std::log10(1.0 + f / 700.0); }
double mel_to_hz(double m) { return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0); }

// Triangular mel filterbank over the kWindow/2+1 power bins.
std::vector<std::vector<double>> mel_filterbank(int n_mels, int sample_rate) {
  const int n_bins = kWindow / 2 + 1;
  const double f_max = sample_rate / 2.0;
  const double mel_max = hz_to_mel(f_max);
  std::vector<double> edges(n_mels + 2);
  for (int i = 0; i < n_mels + 2; ++i)
    edges[i] = mel_to_hz(mel_max * i / (n_mels + 1));

  std::vector<std::vector<double>> fb(n_mels, std::vector<double>(n_bins, 0.0));
  for (int m = 0; m < n_mels; ++m) {
    const double lo = edges[m], mid = edges[m + 1], hi = edges[m + 2];
    for (int b = 0; b < n_bins; ++b) {
      const double f = static_cast<double>(b) * sample_rate / kWindow;
      if (f > lo && f < mid)
        fb[m][b] = (f - lo) / (mid - lo);
      else if (f >= mid && f < hi)
        fb[m][b] = (hi - f) / (hi - mid);
    }
  }
  return fb;
}

}  // namespace

std::vector<std::vector<double>> logmel_frames(const Waveform& wave,
                                               int n_mels, int n_frames) {
  if (n_frames <= 0) throw ShapeError("logmel_frames: no frames requested");
  const auto fb = mel_filterbank(n_mels, wave.sample_rate);

  std::vector<double> window(kWindow);
  for (int i = 0; i < kWindow; ++i)
    window[i] = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * i / kWindow));

  std::vector<std::vector<double>> out(n_frames, std::vector<double>(n_mels));
  std::vector<std::complex<double>> buf(kWindow);
  for (int t = 0; t < n_frames; ++t) {
    const size_t start = static_cast<size_t>(t) * kHop;
    for (int i = 0; i < kWindow; ++i) {
      const size_t idx = start + i;
      const double s = idx < wave.size() ? wave.samples[idx] : 0.0;
      buf[i] = {s * window[i], 0.0};
    }
    fft(buf);
    for (int m = 0; m < n_mels; ++m) {
      double acc = 0.0;
      for (int b = 0; b <= kWindow / 2; ++b) acc += fb[m][b] * std::norm(buf[b]);
      out[t][m] = std::log(acc + 1e-10);
    }
  }
  return out;
}

}  // namespace rkd
