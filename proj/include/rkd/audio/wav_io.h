// rkd/audio/wav_io.h
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

#ifndef RKD_AUDIO_WAV_IO_H_
#define RKD_AUDIO_WAV_IO_H_

#include <filesystem>

#include "rkd/audio/waveform.h"

namespace rkd {

// Reads a mono 16-bit PCM RIFF/WAVE file.  Malformed or unsupported input
// raises IoError naming the offending chunk and byte offset.
Waveform wav_read(const std::filesystem::path& path);

// Writes mono 16-bit PCM; samples are clipped to [-1, 1] before quantizing.
void wav_write(const std::filesystem::path& path, const Waveform& wave);

}  // namespace rkd

#endif  // RKD_AUDIO_WAV_IO_H_
