// rkd/audio/dsp.cc
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

#include "rkd/audio/dsp.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "rkd/common/error.h"

namespace rkd {

Waveform crop_noise(const Waveform& noise, size_t length, size_t offset) {
  if (noise.empty()) throw ShapeError("crop_noise: empty noise clip");
  Waveform seg;
  seg.sample_rate = noise.sample_rate;
  seg.samples.resize(length);
  const size_t n = noise.size();
  for (size_t i = 0; i < length; ++i) seg.samples[i] = noise.samples[(offset + i) % n];
  return seg;
}

Waveform mix_at_snr_offset(const Waveform& speech, const Waveform& noise,
                           double snr_db, size_t offset) {
  if (speech.empty()) throw ShapeError("mix_at_snr: empty speech");
  if (noise.empty()) throw ShapeError("mix_at_snr: empty noise");
  Waveform seg = crop_noise(noise, speech.size(), offset);
  const double noise_rms = rms(seg);
  if (noise_rms <= 0.0)
    throw NumericError("mix_at_snr: noise segment has zero power");
  const double g =
      rms(speech) / noise_rms * std::pow(10.0, -snr_db / 20.0);
  Waveform out = speech;
  for (size_t i = 0; i < out.size(); ++i) out.samples[i] += g * seg.samples[i];
  return out;
}

Waveform mix_at_snr(const Waveform& speech, const Waveform& noise,
                    double snr_db, Rng& rng) {
  if (noise.empty()) throw ShapeError("mix_at_snr: empty noise");
  return mix_at_snr_offset(speech, noise, snr_db, rng.uniform_int(noise.size()));
}

Waveform gaussian_noise(size_t length, double stddev, Rng& rng,
                        int sample_rate) {
  if (length == 0) throw ShapeError("gaussian_noise: length must be positive");
  if (stddev < 0.0) throw ConfigError("gaussian_noise: negative stddev");
  Waveform w;
  w.sample_rate = sample_rate;
  w.samples.resize(length);
  for (auto& v : w.samples) v = stddev * rng.normal();
  return w;
}

Waveform convolve_trunc(const Waveform& x, const Rir& h) {
  if (x.sample_rate != h.sample_rate)
    throw ShapeError("convolve_trunc: sample rate mismatch (" +
                     std::to_string(x.sample_rate) + " vs " +
                     std::to_string(h.sample_rate) + ")");
  const size_t n = x.size();
  const size_t k = h.taps.size();
  Waveform y;
  y.sample_rate = x.sample_rate;
  y.samples.assign(n, 0.0);
  for (size_t j = 0; j < k; ++j) {
    const double hj = h.taps[j];
    if (hj == 0.0) continue;
    for (size_t i = j; i < n; ++i) y.samples[i] += hj * x.samples[i - j];
  }
  return y;
}

Waveform band_reject(const Waveform& x, double f_center, double bandwidth) {
  const double fs = static_cast<double>(x.sample_rate);
  if (!(f_center > 0.0 && f_center < fs / 2.0))
    throw ConfigError("band_reject: center frequency " +
                      std::to_string(f_center) +
                      " Hz outside (0, fs/2) for fs = " + std::to_string(fs));
  if (!(bandwidth > 0.0))
    throw ConfigError("band_reject: bandwidth must be positive");

  // RBJ audio-cookbook notch.
  const double q = f_center / bandwidth;
  const double w0 = 2.0 * std::numbers::pi * f_center / fs;
  const double alpha = std::sin(w0) / (2.0 * q);
  const double cw = std::cos(w0);
  const double a0 = 1.0 + alpha;
  const double b0 = 1.0 / a0, b1 = -2.0 * cw / a0, b2 = 1.0 / a0;
  const double a1 = -2.0 * cw / a0, a2 = (1.0 - alpha) / a0;

  Waveform y;
  y.sample_rate = x.sample_rate;
  y.samples.resize(x.size());
  double z1 = 0.0, z2 = 0.0;  // direct form II transposed
  for (size_t i = 0; i < x.size(); ++i) {
    const double in = x.samples[i];
    const double out = b0 * in + z1;
    z1 = b1 * in - a1 * out + z2;
    z2 = b2 * in - a2 * out;
    y.samples[i] = out;
  }
  return y;
}

namespace {

// Linear-interpolation resample: y[n] = x(n * step).
std::vector<double> resample_linear(const std::vector<double>& x, double step) {
  const size_t n = x.size();
  const size_t m = static_cast<size_t>(std::floor((n - 1) / step)) + 1;
  std::vector<double> y(m);
  for (size_t i = 0; i < m; ++i) {
    const double t = i * step;
    const size_t i0 = static_cast<size_t>(t);
    const double frac = t - static_cast<double>(i0);
    const size_t i1 = std::min(i0 + 1, n - 1);
    y[i] = (1.0 - frac) * x[i0] + frac * x[i1];
  }
  return y;
}

// Synchronized overlap-add time stretch of y to exactly out_len samples.
std::vector<double> sola_stretch(std::vector<double> y, size_t out_len,
                                 int sample_rate) {
  size_t win = static_cast<size_t>(std::lround(0.025 * sample_rate));
  win = std::max<size_t>(win & ~size_t{1}, 32);  // even, not too tiny
  const size_t hop = win / 2;
  if (y.size() < win + 1) y.resize(win + 1, 0.0);

  const size_t m = y.size();
  const size_t search = std::max<size_t>(win / 8, 4);
  std::vector<double> w(win);
  for (size_t j = 0; j < win; ++j)
    w[j] = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * j / win));

  std::vector<double> acc(out_len, 0.0), wsum(out_len, 0.0);
  const double span_out = static_cast<double>(out_len > win ? out_len - win : 1);
  const double span_in = static_cast<double>(m - win);

  for (size_t q = 0;; q += hop) {
    if (q >= out_len) break;
    long p = std::lround(static_cast<double>(q) / span_out * span_in);
    p = std::clamp<long>(p, 0, static_cast<long>(m - win));

    if (q > 0) {
      // Align the candidate frame with the material already written.
      const size_t ov = std::min(hop, out_len - q);
      long best = 0;
      double best_score = -1e300;
      const long lo = -std::min<long>(search, p);
      const long hi = std::min<long>(search, static_cast<long>(m - win) - p);
      for (long d = lo; d <= hi; ++d) {
        double dot = 0.0, energy = 1e-12;
        const double* yp = y.data() + p + d;
        for (size_t j = 0; j < ov; ++j) {
          const double ref =
              wsum[q + j] > 1e-9 ? acc[q + j] / wsum[q + j] : 0.0;
          dot += ref * yp[j];
          energy += yp[j] * yp[j];
        }
        const double score = dot / std::sqrt(energy);
        if (score > best_score) {
          best_score = score;
          best = d;
        }
      }
      p += best;
    }

    for (size_t j = 0; j < win && q + j < out_len; ++j) {
      acc[q + j] += w[j] * y[p + j];
      wsum[q + j] += w[j];
    }
  }

  for (size_t i = 0; i < out_len; ++i)
    acc[i] = wsum[i] > 1e-9 ? acc[i] / wsum[i] : 0.0;
  return acc;
}

}  // namespace

Waveform pitch_shift(const Waveform& x, double cents) {
  if (std::fabs(cents) > 1200.0)
    throw ConfigError("pitch_shift: |cents| must be <= 1200, got " +
                      std::to_string(cents));
  if (cents == 0.0) return x;
  if (x.empty()) throw ShapeError("pitch_shift: empty input");

  const double ratio = std::pow(2.0, cents / 1200.0);
  std::vector<double> resampled = resample_linear(x.samples, ratio);
  Waveform out;
  out.sample_rate = x.sample_rate;
  out.samples = sola_stretch(std::move(resampled), x.size(), x.sample_rate);
  return out;
}

}  // namespace rkd
