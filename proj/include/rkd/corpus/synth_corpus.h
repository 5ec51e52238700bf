// rkd/corpus/synth_corpus.h
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

#ifndef RKD_CORPUS_SYNTH_CORPUS_H_
#define RKD_CORPUS_SYNTH_CORPUS_H_

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "rkd/audio/waveform.h"
#include "rkd/common/rng.h"

namespace rkd {

enum class Split { kTrain, kDev, kTest };
const char* split_name(Split s);
Split split_from_name(const std::string& name);

// Speech-like utterance: a sequence of 2-5 harmonic "phone" segments.  Each
// class draws its phones from a disjoint inventory slice, so the label is
// decodable from the phone sequence.
struct Utterance {
  std::string id;
  Waveform wave;
  int class_label = 0;
  Split split = Split::kTrain;
};

enum class BankName { kMusanLike, kWhamLike, kGaussian, kFsdLike, kDnsLike };
inline constexpr int kNumBanks = 5;
const char* bank_name_str(BankName b);
BankName bank_from_name(const std::string& name);
bool bank_is_heldout(BankName b);

struct NoiseBank {
  BankName name = BankName::kGaussian;
  std::vector<Waveform> clips;
  bool heldout = false;
};

struct NoiseBanks {
  std::vector<NoiseBank> banks;  // indexed by BankName
  const NoiseBank& get(BankName b) const {
    return banks.at(static_cast<size_t>(b));
  }
};

struct CorpusConfig {
  int n_classes = 10;
  int phones_per_class = 3;
  int sample_rate = 8000;
  double dur_min_s = 0.5;
  double dur_max_s = 1.0;
  int n_train = 160;
  int n_dev = 32;
  int n_test = 100;
  int noise_clips_per_bank = 6;
  double noise_clip_s = 2.0;

  nlohmann::json to_json() const;
  static CorpusConfig from_json(const nlohmann::json& j);
  void validate() const;
};

struct Corpus {
  CorpusConfig config;
  uint64_t seed = 0;
  std::vector<Utterance> utterances;

  std::vector<const Utterance*> split_view(Split s) const;
};

// Pure functions of (config, seed): regenerating yields identical audio.
Corpus generate_corpus(const CorpusConfig& config, uint64_t seed);
NoiseBanks generate_noise_banks(const CorpusConfig& config, uint64_t seed);

// Colored Gaussian noise with power spectrum ~ f^exponent, RMS-normalized.
Waveform colored_noise(size_t length, double exponent, Rng& rng,
                       int sample_rate);

// On-disk layout: <dir>/manifest.json, <dir>/wav/<id>.wav,
// <dir>/noise/<bank>_<k>.wav.  Loading reads the 16-bit quantized audio so
// every downstream stage sees identical samples.
void save_corpus(const std::filesystem::path& dir, const Corpus& corpus,
                 const NoiseBanks& banks);
struct LoadedCorpus {
  Corpus corpus;
  NoiseBanks banks;
  std::string manifest_hash;
};
LoadedCorpus load_corpus(const std::filesystem::path& dir);

}  // namespace rkd

#endif  // RKD_CORPUS_SYNTH_CORPUS_H_
