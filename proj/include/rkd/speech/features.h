// rkd/speech/features.h
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

#ifndef RKD_SPEECH_FEATURES_H_
#define RKD_SPEECH_FEATURES_H_

#include <vector>

#include "rkd/audio/waveform.h"

namespace rkd {

// Log-mel frames with hop 64 and window 128 (Hann), matched to the model
// front-end frame rate.  Produces exactly n_frames rows; the tail window is
// zero-padded.
std::vector<std::vector<double>> logmel_frames(const Waveform& wave,
                                               int n_mels, int n_frames);

}  // namespace rkd

#endif  // RKD_SPEECH_FEATURES_H_
