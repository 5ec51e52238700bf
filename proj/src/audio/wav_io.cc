// rkd/audio/wav_io.cc
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

#include "rkd/audio/wav_io.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

#include "rkd/common/error.h"

namespace rkd {

namespace {

struct Reader {
  std::vector<char> bytes;
  size_t pos = 0;
  std::string path;

  void need(size_t n, const char* what) const {
    if (pos + n > bytes.size())
      throw IoError("truncated WAV file " + path + ": missing " + what +
                    " at byte offset " + std::to_string(pos));
  }
  uint32_t u32(const char* what) {
    need(4, what);
    uint32_t v;
    std::memcpy(&v, bytes.data() + pos, 4);
    pos += 4;
    return v;
  }
  uint16_t u16(const char* what) {
    need(2, what);
    uint16_t v;
    std::memcpy(&v, bytes.data() + pos, 2);
    pos += 2;
    return v;
  }
  std::string tag(const char* what) {
    need(4, what);
    std::string s(bytes.data() + pos, 4);
    pos += 4;
    return s;
  }
};

inline int16_t quantize(double x) {
  double c = std::clamp(x, -1.0, 1.0);
  return static_cast<int16_t>(std::lrint(c * 32767.0));
}

}  // namespace

Waveform wav_read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open WAV file: " + path.string());
  Reader r;
  r.path = path.string();
  r.bytes.assign(std::istreambuf_iterator<char>(in),
                 std::istreambuf_iterator<char>());

  if (r.tag("'RIFF' tag") != "RIFF")
    throw IoError("not a RIFF file: " + r.path + " (bad tag at byte offset 0)");
  r.u32("RIFF size");
  if (r.tag("'WAVE' tag") != "WAVE")
    throw IoError("not a WAVE file: " + r.path + " (bad tag at byte offset 8)");

  bool have_fmt = false;
  uint16_t channels = 0, bits = 0, format = 0;
  uint32_t sample_rate = 0;

  while (r.pos + 8 <= r.bytes.size()) {
    std::string id = r.tag("chunk id");
    uint32_t size = r.u32("chunk size");
    if (id == "fmt ") {
      size_t start = r.pos;
      format = r.u16("fmt.format");
      channels = r.u16("fmt.channels");
      sample_rate = r.u32("fmt.sample_rate");
      r.u32("fmt.byte_rate");
      r.u16("fmt.block_align");
      bits = r.u16("fmt.bits_per_sample");
      r.pos = start + size + (size & 1);
      have_fmt = true;
    } else if (id == "data") {
      if (!have_fmt)
        throw IoError("WAV file " + r.path +
                      ": 'data' chunk precedes 'fmt ' chunk at byte offset " +
                      std::to_string(r.pos - 8));
      if (format != 1)
        throw IoError("unsupported WAV encoding in " + r.path +
                      ": format tag " + std::to_string(format) +
                      " (only PCM is supported)");
      if (channels != 1)
        throw IoError("unsupported WAV format in " + r.path + ": " +
                      std::to_string(channels) +
                      " channels (only mono is supported)");
      if (bits != 16)
        throw IoError("unsupported WAV format in " + r.path + ": " +
                      std::to_string(bits) +
                      " bits per sample (only 16-bit is supported)");
      r.need(size, "'data' payload");
      const size_t n = size / 2;
      Waveform w;
      w.sample_rate = static_cast<int>(sample_rate);
      w.samples.resize(n);
      for (size_t i = 0; i < n; ++i) {
        int16_t v;
        std::memcpy(&v, r.bytes.data() + r.pos + 2 * i, 2);
        w.samples[i] = static_cast<double>(v) / 32767.0;
      }
      return w;
    } else {
      r.need(size, ("payload of chunk '" + id + "'").c_str());
      r.pos += size + (size & 1);
    }
  }
  throw IoError("truncated WAV file " + r.path +
                ": missing 'data' chunk (scanned to byte offset " +
                std::to_string(r.pos) + ")");
}

void wav_write(const std::filesystem::path& path, const Waveform& wave) {
  if (wave.sample_rate <= 0)
    throw IoError("wav_write: invalid sample rate for " + path.string());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write WAV file: " + path.string());

  const uint32_t n = static_cast<uint32_t>(wave.samples.size());
  const uint32_t data_bytes = n * 2;
  const uint32_t riff_size = 36 + data_bytes;
  const uint32_t sr = static_cast<uint32_t>(wave.sample_rate);
  const uint32_t byte_rate = sr * 2;
  const uint16_t block_align = 2, bits = 16, fmt_pcm = 1, channels = 1;
  const uint32_t fmt_size = 16;

  auto put = [&](const void* p, size_t k) {
    out.write(static_cast<const char*>(p), static_cast<std::streamsize>(k));
  };
  put("RIFF", 4);
  put(&riff_size, 4);
  put("WAVE", 4);
  put("fmt ", 4);
  put(&fmt_size, 4);
  put(&fmt_pcm, 2);
  put(&channels, 2);
  put(&sr, 4);
  put(&byte_rate, 4);
  put(&block_align, 2);
  put(&bits, 2);
  put("data", 4);
  put(&data_bytes, 4);
  std::vector<int16_t> pcm(n);
  for (uint32_t i = 0; i < n; ++i) pcm[i] = quantize(wave.samples[i]);
  put(pcm.data(), data_bytes);
  if (!out) throw IoError("short write to " + path.string());
}

}  // namespace rkd
