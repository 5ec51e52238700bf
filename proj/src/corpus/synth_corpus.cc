// rkd/corpus/synth_corpus.cc
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

#include "rkd/corpus/synth_corpus.h"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include "rkd/audio/dsp.h"
#include "rkd/audio/wav_io.h"
#include "rkd/common/error.h"
#include "rkd/common/fft.h"
#include "rkd/common/jsonio.h"

namespace rkd {

const char* split_name(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kDev: return "dev";
    case Split::kTest: return "test";
  }
  return "?";
}

Split split_from_name(const std::string& name) {
  if (name == "train") return Split::kTrain;
  if (name == "dev") return Split::kDev;
  if (name == "test") return Split::kTest;
  throw ConfigError("unknown split name: " + name);
}

const char* bank_name_str(BankName b) {
  switch (b) {
    case BankName::kMusanLike: return "musan_like";
    case BankName::kWhamLike: return "wham_like";
    case BankName::kGaussian: return "gaussian";
    case BankName::kFsdLike: return "fsd_like";
    case BankName::kDnsLike: return "dns_like";
  }
  return "?";
}

BankName bank_from_name(const std::string& name) {
  for (int i = 0; i < kNumBanks; ++i) {
    auto b = static_cast<BankName>(i);
    if (name == bank_name_str(b)) return b;
  }
  throw ConfigError("unknown noise bank: " + name);
}

bool bank_is_heldout(BankName b) {
  return b == BankName::kFsdLike || b == BankName::kDnsLike;
}

nlohmann::json CorpusConfig::to_json() const {
  return {{"n_classes", n_classes},
          {"phones_per_class", phones_per_class},
          {"sample_rate", sample_rate},
          {"dur_min_s", dur_min_s},
          {"dur_max_s", dur_max_s},
          {"n_train", n_train},
          {"n_dev", n_dev},
          {"n_test", n_test},
          {"noise_clips_per_bank", noise_clips_per_bank},
          {"noise_clip_s", noise_clip_s}};
}

CorpusConfig CorpusConfig::from_json(const nlohmann::json& j) {
  CorpusConfig c;
  c.n_classes = j.value("n_classes", c.n_classes);
  c.phones_per_class = j.value("phones_per_class", c.phones_per_class);
  c.sample_rate = j.value("sample_rate", c.sample_rate);
  c.dur_min_s = j.value("dur_min_s", c.dur_min_s);
  c.dur_max_s = j.value("dur_max_s", c.dur_max_s);
  c.n_train = j.value("n_train", c.n_train);
  c.n_dev = j.value("n_dev", c.n_dev);
  c.n_test = j.value("n_test", c.n_test);
  c.noise_clips_per_bank = j.value("noise_clips_per_bank", c.noise_clips_per_bank);
  c.noise_clip_s = j.value("noise_clip_s", c.noise_clip_s);
  return c;
}

void CorpusConfig::validate() const {
  if (n_classes < 2) throw ConfigError("corpus: n_classes must be >= 2");
  if (phones_per_class < 1)
    throw ConfigError("corpus: phones_per_class must be >= 1");
  if (sample_rate != 4000 && sample_rate != 8000 && sample_rate != 16000)
    throw ConfigError("corpus: sample_rate must be one of 4000/8000/16000");
  if (!(dur_min_s > 0.0 && dur_max_s >= dur_min_s))
    throw ConfigError("corpus: empty or negative duration range");
  if (n_train <= 0 || n_dev <= 0 || n_test <= 0)
    throw ConfigError("corpus: all split sizes must be positive");
  if (noise_clips_per_bank <= 0 || noise_clip_s <= 0.0)
    throw ConfigError("corpus: invalid noise bank sizing");
}

std::vector<const Utterance*> Corpus::split_view(Split s) const {
  std::vector<const Utterance*> v;
  for (const auto& u : utterances)
    if (u.split == s) v.push_back(&u);
  return v;
}

namespace {

// One biquad band-pass pass (constant peak gain) shaping a phone's formant.
void formant_filter(std::vector<double>& x, double f_center, double q, int fs) {
  const double w0 = 2.0 * std::numbers::pi * f_center / fs;
  const double alpha = std::sin(w0) / (2.0 * q);
  const double a0 = 1.0 + alpha;
  const double b0 = alpha / a0, b2 = -alpha / a0;
  const double a1 = -2.0 * std::cos(w0) / a0, a2 = (1.0 - alpha) / a0;
  double z1 = 0.0, z2 = 0.0;
  for (auto& v : x) {
    const double in = v;
    const double out = b0 * in + z1;
    z1 = -a1 * out + z2;
    z2 = b2 * in - a2 * out;
    v = out;
  }
}

// Phone timbre table: fundamental and formant are deterministic in the
// global phone index, so inventories are disjoint across classes.  Class
// inventories interleave (phone = slot * n_classes + class), which puts
// different classes on spectrally adjacent phones: telling classes apart
// needs fine spectral-shape detail that distortions can plausibly erase.
double phone_f0(int phone, int n_classes) {
  const int slot = phone / n_classes, cls = phone % n_classes;
  return 110.0 + 60.0 * slot + 4.0 * cls;
}
double phone_formant(int phone, int n_classes, int fs) {
  const int slot = phone / n_classes, cls = phone % n_classes;
  return std::min(700.0 + 900.0 * slot + 90.0 * cls, 0.45 * fs);
}

std::vector<double> synth_phone(int phone, int n_classes, size_t n, int fs,
                                Rng& rng) {
  const double f0 = phone_f0(phone, n_classes);
  // Aspiration-dominated excitation: the class cue is the formant's
  // position, carried mostly by shaped noise; the harmonic comb adds pitch.
  std::vector<double> x(n);
  for (auto& v : x) v = rng.normal();
  const int harmonics =
      std::max(1, std::min(8, static_cast<int>(0.45 * fs / f0)));
  for (int k = 1; k <= harmonics; ++k) {
    const double amp = 0.65 * std::pow(static_cast<double>(k), -0.5);
    const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double w = 2.0 * std::numbers::pi * f0 * k / fs;
    for (size_t i = 0; i < n; ++i) x[i] += amp * std::sin(w * i + phase);
  }
  formant_filter(x, phone_formant(phone, n_classes, fs), 5.0, fs);

  // Raised-cosine attack/release to avoid clicks at segment joins.
  const size_t edge = std::min<size_t>(n / 4, std::lround(0.008 * fs));
  for (size_t i = 0; i < edge; ++i) {
    const double g =
        0.5 * (1.0 - std::cos(std::numbers::pi * i / std::max<size_t>(edge, 1)));
    x[i] *= g;
    x[n - 1 - i] *= g;
  }
  const double amp = rng.uniform(0.7, 1.0);
  for (auto& v : x) v *= amp;
  return x;
}

Utterance synth_utterance(const CorpusConfig& cfg, const std::string& id,
                          Split split, Rng rng) {
  Utterance u;
  u.id = id;
  u.split = split;
  u.class_label = static_cast<int>(rng.uniform_int(cfg.n_classes));
  u.wave.sample_rate = cfg.sample_rate;

  const double dur = rng.uniform(cfg.dur_min_s, cfg.dur_max_s);
  const size_t n = static_cast<size_t>(std::lround(dur * cfg.sample_rate));
  const int n_seg = 2 + static_cast<int>(rng.uniform_int(4));  // 2..5

  // Random segment proportions.
  std::vector<double> weights(n_seg);
  double wsum = 0.0;
  for (auto& w : weights) {
    w = rng.uniform(0.5, 1.5);
    wsum += w;
  }

  u.wave.samples.reserve(n);
  size_t placed = 0;
  for (int s = 0; s < n_seg; ++s) {
    size_t seg_len = (s == n_seg - 1)
                         ? n - placed
                         : static_cast<size_t>(std::lround(n * weights[s] / wsum));
    seg_len = std::min(seg_len, n - placed);
    if (seg_len == 0) continue;
    const int phone =
        static_cast<int>(rng.uniform_int(cfg.phones_per_class)) *
            cfg.n_classes +
        u.class_label;
    auto seg = synth_phone(phone, cfg.n_classes, seg_len, cfg.sample_rate, rng);
    u.wave.samples.insert(u.wave.samples.end(), seg.begin(), seg.end());
    placed += seg_len;
  }
  if (placed < n) u.wave.samples.resize(n, 0.0);

  limit_peak(u.wave, 0.5);
  validate_waveform(u.wave, "synth_utterance");
  return u;
}

}  // namespace

Corpus generate_corpus(const CorpusConfig& config, uint64_t seed) {
  config.validate();
  Corpus corpus;
  corpus.config = config;
  corpus.seed = seed;
  Rng root = Rng::substream(seed, "corpus");

  struct SplitPlan {
    Split split;
    int count;
  };
  const SplitPlan plans[] = {{Split::kTrain, config.n_train},
                             {Split::kDev, config.n_dev},
                             {Split::kTest, config.n_test}};
  for (const auto& plan : plans) {
    for (int i = 0; i < plan.count; ++i) {
      char idbuf[32];
      std::snprintf(idbuf, sizeof(idbuf), "%s_%04d", split_name(plan.split), i);
      // Per-utterance substream keyed by id: parallel-generation safe.
      corpus.utterances.push_back(
          synth_utterance(config, idbuf, plan.split, root.fork(idbuf)));
    }
  }
  return corpus;
}

Waveform colored_noise(size_t length, double exponent, Rng& rng,
                       int sample_rate) {
  const size_t nfft = next_pow2(std::max<size_t>(length, 2));
  std::vector<std::complex<double>> buf(nfft);
  for (auto& v : buf) v = {rng.normal(), 0.0};
  fft(buf);
  const double f_ref = 100.0;
  for (size_t i = 0; i <= nfft / 2; ++i) {
    const double f = static_cast<double>(i) * sample_rate / nfft;
    const double gain = (i == 0) ? 0.0 : std::pow(f / f_ref, exponent / 2.0);
    buf[i] *= gain;
    if (i > 0 && i < nfft / 2) buf[nfft - i] = std::conj(buf[i]);
  }
  fft(buf, /*inverse=*/true);
  Waveform w;
  w.sample_rate = sample_rate;
  w.samples.resize(length);
  for (size_t i = 0; i < length; ++i) w.samples[i] = buf[i].real();
  const double r = rms(w);
  if (r > 0.0)
    for (auto& v : w.samples) v /= r;
  return w;
}

namespace {

Waveform make_noise_clip(BankName bank, const CorpusConfig& cfg, Rng rng) {
  const int fs = cfg.sample_rate;
  const size_t n = static_cast<size_t>(std::lround(cfg.noise_clip_s * fs));
  Waveform w;
  w.sample_rate = fs;

  switch (bank) {
    case BankName::kMusanLike: {
      // Band-limited tone bursts over pink noise.
      w = colored_noise(n, -1.0, rng, fs);
      for (auto& v : w.samples) v *= 0.6;
      const int bursts = std::max(1, static_cast<int>(cfg.noise_clip_s * 3));
      for (int b = 0; b < bursts; ++b) {
        const double f = rng.uniform(300.0, 2500.0);
        const size_t len = static_cast<size_t>(rng.uniform(0.05, 0.2) * fs);
        const size_t start = rng.uniform_int(std::max<size_t>(n - len, 1));
        const double amp = rng.uniform(0.5, 1.0);
        const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
        for (size_t i = 0; i < len && start + i < n; ++i) {
          const double env =
              0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * i / len));
          w.samples[start + i] +=
              amp * env *
              std::sin(2.0 * std::numbers::pi * f * i / fs + phase);
        }
      }
      break;
    }
    case BankName::kWhamLike: {
      // Amplitude-modulated brown noise, babble-like.
      w = colored_noise(n, -2.0, rng, fs);
      const double f_am = rng.uniform(1.5, 5.0);
      const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
      for (size_t i = 0; i < n; ++i) {
        const double env =
            0.35 + 0.65 * (0.5 + 0.5 * std::sin(2.0 * std::numbers::pi * f_am *
                                                    i / fs +
                                                phase));
        w.samples[i] *= env;
      }
      break;
    }
    case BankName::kGaussian: {
      w = gaussian_noise(n, 1.0, rng, fs);
      break;
    }
    case BankName::kFsdLike: {
      // Impulsive event train over blue noise.
      w = colored_noise(n, 1.0, rng, fs);
      for (auto& v : w.samples) v *= 0.4;
      const int events = std::max(1, static_cast<int>(cfg.noise_clip_s * 8));
      for (int e = 0; e < events; ++e) {
        const size_t start = rng.uniform_int(n);
        const double tau = rng.uniform(0.003, 0.015) * fs;
        const double amp = rng.uniform(0.8, 2.0);
        const size_t len = static_cast<size_t>(tau * 6);
        for (size_t i = 0; i < len && start + i < n; ++i)
          w.samples[start + i] += amp * std::exp(-static_cast<double>(i) / tau) *
                                  rng.normal() * 0.5;
      }
      break;
    }
    case BankName::kDnsLike: {
      // Mains-hum harmonics over pink noise, domestic-recording flavor.
      w = colored_noise(n, -1.0, rng, fs);
      for (auto& v : w.samples) v *= 0.5;
      for (int k = 1; k <= 5; ++k) {
        const double f = 60.0 * k;
        const double amp = 1.2 / k;
        const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
        for (size_t i = 0; i < n; ++i)
          w.samples[i] +=
              amp * std::sin(2.0 * std::numbers::pi * f * i / fs + phase);
      }
      break;
    }
  }

  // Common loudness scale; SNR mixing rescales anyway.
  const double r = rms(w);
  if (r > 0.0)
    for (auto& v : w.samples) v *= 0.15 / r;
  limit_peak(w, 0.95);
  validate_waveform(w, "make_noise_clip");
  return w;
}

}  // namespace

NoiseBanks generate_noise_banks(const CorpusConfig& config, uint64_t seed) {
  config.validate();
  NoiseBanks out;
  Rng root = Rng::substream(seed, "noise_banks");
  for (int b = 0; b < kNumBanks; ++b) {
    NoiseBank bank;
    bank.name = static_cast<BankName>(b);
    bank.heldout = bank_is_heldout(bank.name);
    for (int k = 0; k < config.noise_clips_per_bank; ++k) {
      bank.clips.push_back(make_noise_clip(
          bank.name, config, root.fork(bank_name_str(bank.name), k)));
      if (rms(bank.clips.back()) <= 0.0)
        throw NumericError("noise bank clip has zero power");
    }
    out.banks.push_back(std::move(bank));
  }
  return out;
}

void save_corpus(const std::filesystem::path& dir, const Corpus& corpus,
                 const NoiseBanks& banks) {
  namespace fs = std::filesystem;
  fs::create_directories(dir / "wav");
  fs::create_directories(dir / "noise");

  nlohmann::json utts = nlohmann::json::array();
  for (const auto& u : corpus.utterances) {
    const std::string rel = "wav/" + u.id + ".wav";
    wav_write(dir / rel, u.wave);
    utts.push_back({{"id", u.id},
                    {"split", split_name(u.split)},
                    {"class", u.class_label},
                    {"path", rel},
                    {"n_samples", u.wave.size()}});
  }

  nlohmann::json banks_j = nlohmann::json::array();
  for (const auto& bank : banks.banks) {
    nlohmann::json clips = nlohmann::json::array();
    for (size_t k = 0; k < bank.clips.size(); ++k) {
      char buf[64];
      std::snprintf(buf, sizeof(buf), "noise/%s_%02zu.wav",
                    bank_name_str(bank.name), k);
      wav_write(dir / buf, bank.clips[k]);
      clips.push_back(buf);
    }
    banks_j.push_back({{"name", bank_name_str(bank.name)},
                       {"heldout", bank.heldout},
                       {"clips", clips}});
  }

  nlohmann::json manifest = {
      {"version", kVersionString},
      {"seed", corpus.seed},
      {"config", corpus.config.to_json()},
      {"config_hash", json_hash(corpus.config.to_json())},
      {"utterances", utts},
      {"noise_banks", banks_j}};
  save_json(dir / "manifest.json", manifest);
}

LoadedCorpus load_corpus(const std::filesystem::path& dir) {
  const auto manifest_path = dir / "manifest.json";
  if (!std::filesystem::exists(manifest_path))
    throw DependencyError("missing stage gen-corpus: no manifest at " +
                          manifest_path.string());
  nlohmann::json manifest = load_json(manifest_path);

  LoadedCorpus out;
  out.corpus.config = CorpusConfig::from_json(manifest.at("config"));
  out.corpus.seed = manifest.at("seed");
  out.manifest_hash = json_hash(manifest);

  for (const auto& j : manifest.at("utterances")) {
    Utterance u;
    u.id = j.at("id");
    u.split = split_from_name(j.at("split"));
    u.class_label = j.at("class");
    u.wave = wav_read(dir / j.at("path").get<std::string>());
    out.corpus.utterances.push_back(std::move(u));
  }
  for (const auto& j : manifest.at("noise_banks")) {
    NoiseBank bank;
    bank.name = bank_from_name(j.at("name"));
    bank.heldout = j.at("heldout");
    for (const auto& p : j.at("clips"))
      bank.clips.push_back(wav_read(dir / p.get<std::string>()));
    out.banks.banks.push_back(std::move(bank));
  }
  return out;
}

}  // namespace rkd
