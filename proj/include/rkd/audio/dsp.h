// rkd/audio/dsp.h
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

#ifndef RKD_AUDIO_DSP_H_
#define RKD_AUDIO_DSP_H_

#include <cstddef>

#include "rkd/audio/rir.h"
#include "rkd/audio/waveform.h"
#include "rkd/common/rng.h"

namespace rkd {

// Cyclically tiles/crops `noise` to `length` starting at `offset` samples.
Waveform crop_noise(const Waveform& noise, size_t length, size_t offset);

// Adds `noise` to `speech` scaled so the realized speech-to-noise power
// ratio equals snr_db exactly.  The noise segment is cropped (or tiled)
// to the speech length at an offset drawn from `rng`.
Waveform mix_at_snr(const Waveform& speech, const Waveform& noise,
                    double snr_db, Rng& rng);

// Deterministic core of mix_at_snr with an explicit crop offset.
Waveform mix_at_snr_offset(const Waveform& speech, const Waveform& noise,
                           double snr_db, size_t offset);

// I.i.d. zero-mean normal samples with the given standard deviation.
Waveform gaussian_noise(size_t length, double stddev, Rng& rng,
                        int sample_rate);

// Linear convolution truncated to len(x); direct form.
Waveform convolve_trunc(const Waveform& x, const Rir& h);

// Second-order IIR notch (audio-cookbook band-stop) applied once.
// `bandwidth` is the -3 dB width in Hz (Q = f_center / bandwidth).
Waveform band_reject(const Waveform& x, double f_center, double bandwidth);

// Length-preserving pitch shift: linear-interpolation resampling by
// 2^(cents/1200) followed by a synchronized overlap-add time stretch back
// to the original length (25 ms windows, 50% hop).  cents = 0 returns the
// input unchanged.
Waveform pitch_shift(const Waveform& x, double cents);

}  // namespace rkd

#endif  // RKD_AUDIO_DSP_H_
