// rkd/audio/waveform.h
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

#ifndef RKD_AUDIO_WAVEFORM_H_
#define RKD_AUDIO_WAVEFORM_H_

#include <cstddef>
#include <vector>

namespace rkd {

// Mono discrete-time signal; the carrier of all DSP and model input.
struct Waveform {
  std::vector<double> samples;
  int sample_rate = 0;

  size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
  double duration_s() const {
    return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate
                           : 0.0;
  }
};

double rms(const std::vector<double>& x);
double rms(const Waveform& w);

// Peak-normalizes in place to `peak` if the current peak exceeds it.
void limit_peak(Waveform& w, double peak);

// Throws if the waveform is empty or holds non-finite samples.
void validate_waveform(const Waveform& w, const char* context);

}  // namespace rkd

#endif  // RKD_AUDIO_WAVEFORM_H_
