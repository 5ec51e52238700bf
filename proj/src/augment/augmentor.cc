// rkd/augment/augmentor.cc
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

#include "rkd/augment/augmentor.h"

#include <cmath>
#include <string>

#include "rkd/audio/dsp.h"
#include "rkd/common/error.h"

namespace rkd {

DistortionLabel DistortionLabel::clean_label() {
  DistortionLabel l;
  l.bits[kCleanClass] = 1;
  return l;
}

bool DistortionLabel::valid() const {
  int total = 0;
  for (auto b : bits) total += b;
  if (bits[kCleanClass]) return total == 1;
  if (total == 0) return false;
  const int additive = bits[0] + bits[1] + bits[2];
  const int non_additive = bits[3] + bits[4] + bits[5];
  return additive <= 1 && non_additive <= 1;
}

nlohmann::json DistortionLabel::to_json() const {
  nlohmann::json j = nlohmann::json::array();
  for (auto b : bits) j.push_back(static_cast<int>(b));
  return j;
}

const char* non_additive_kind_name(NonAdditiveKind k) {
  switch (k) {
    case NonAdditiveKind::kReverberation: return "reverberation";
    case NonAdditiveKind::kPitchShift: return "pitch_shift";
    case NonAdditiveKind::kBandReject: return "band_reject";
  }
  return "?";
}

bool AdditivePart::operator==(const AdditivePart& o) const {
  if (bank != o.bank || snr_db != o.snr_db || clip_index != o.clip_index ||
      crop_offset != o.crop_offset || rir_applied != o.rir_applied)
    return false;
  if (!rir_applied) return true;
  return room.dims == o.room.dims && room.src == o.room.src &&
         room.mic == o.room.mic && room.absorption == o.room.absorption;
}

bool NonAdditivePart::operator==(const NonAdditivePart& o) const {
  if (kind != o.kind) return false;
  switch (kind) {
    case NonAdditiveKind::kReverberation:
      return room.dims == o.room.dims && room.src == o.room.src &&
             room.mic == o.room.mic && room.absorption == o.room.absorption;
    case NonAdditiveKind::kPitchShift:
      return cents == o.cents;
    case NonAdditiveKind::kBandReject:
      return f_center == o.f_center && bandwidth == o.bandwidth;
  }
  return false;
}

bool DistortionSpec::operator==(const DistortionSpec& o) const {
  return additive == o.additive && non_additive == o.non_additive;
}

nlohmann::json DistortionSpec::to_json() const {
  nlohmann::json j;
  if (additive) {
    j["additive"] = {{"bank", bank_name_str(additive->bank)},
                     {"snr_db", additive->snr_db},
                     {"clip_index", additive->clip_index},
                     {"crop_offset", additive->crop_offset},
                     {"rir_applied", additive->rir_applied}};
    if (additive->rir_applied) j["additive"]["room"] = additive->room.to_json();
  }
  if (non_additive) {
    nlohmann::json n = {{"kind", non_additive_kind_name(non_additive->kind)}};
    switch (non_additive->kind) {
      case NonAdditiveKind::kReverberation:
        n["room"] = non_additive->room.to_json();
        break;
      case NonAdditiveKind::kPitchShift:
        n["cents"] = non_additive->cents;
        break;
      case NonAdditiveKind::kBandReject:
        n["f_center"] = non_additive->f_center;
        n["bandwidth"] = non_additive->bandwidth;
        break;
    }
    j["non_additive"] = n;
  }
  j["rng_provenance"] = rng_provenance;
  return j;
}

void AugmentPolicy::validate() const {
  const double ps[] = {p_clean, p_add_only, p_nonadd_only, p_both};
  double sum = 0.0;
  for (double p : ps) {
    if (p < 0.0) throw ConfigError("augment policy: negative probability");
    sum += p;
  }
  if (std::fabs(sum - 1.0) > 1e-9)
    throw ConfigError("augment policy: probabilities sum to " +
                      std::to_string(sum) + ", expected 1");
  if (!(snr_min_db <= snr_max_db))
    throw ConfigError("augment policy: empty SNR range");
  if (sample_rate <= 0) throw ConfigError("augment policy: bad sample rate");
}

nlohmann::json AugmentPolicy::to_json() const {
  return {{"p_clean", p_clean},
          {"p_add_only", p_add_only},
          {"p_nonadd_only", p_nonadd_only},
          {"p_both", p_both},
          {"snr_min_db", snr_min_db},
          {"snr_max_db", snr_max_db},
          {"pitch_max_cents", pitch_max_cents},
          {"band_f_min_hz", band_f_min_hz},
          {"band_f_max_frac", band_f_max_frac},
          {"band_q_min", band_q_min},
          {"band_q_max", band_q_max},
          {"room_dim_min_m", room_dim_min_m},
          {"room_dim_max_m", room_dim_max_m},
          {"room_absorption_min", room_absorption_min},
          {"room_absorption_max", room_absorption_max},
          {"room_max_order", room_max_order},
          {"sample_rate", sample_rate}};
}

AugmentPolicy AugmentPolicy::from_json(const nlohmann::json& j) {
  AugmentPolicy p;
  p.p_clean = j.value("p_clean", p.p_clean);
  p.p_add_only = j.value("p_add_only", p.p_add_only);
  p.p_nonadd_only = j.value("p_nonadd_only", p.p_nonadd_only);
  p.p_both = j.value("p_both", p.p_both);
  p.snr_min_db = j.value("snr_min_db", p.snr_min_db);
  p.snr_max_db = j.value("snr_max_db", p.snr_max_db);
  p.pitch_max_cents = j.value("pitch_max_cents", p.pitch_max_cents);
  p.band_f_min_hz = j.value("band_f_min_hz", p.band_f_min_hz);
  p.band_f_max_frac = j.value("band_f_max_frac", p.band_f_max_frac);
  p.band_q_min = j.value("band_q_min", p.band_q_min);
  p.band_q_max = j.value("band_q_max", p.band_q_max);
  p.room_dim_min_m = j.value("room_dim_min_m", p.room_dim_min_m);
  p.room_dim_max_m = j.value("room_dim_max_m", p.room_dim_max_m);
  p.room_absorption_min = j.value("room_absorption_min", p.room_absorption_min);
  p.room_absorption_max = j.value("room_absorption_max", p.room_absorption_max);
  p.room_max_order = j.value("room_max_order", p.room_max_order);
  p.sample_rate = j.value("sample_rate", p.sample_rate);
  return p;
}

const char* cdm_setup_name(CdmSetup s) {
  switch (s) {
    case CdmSetup::kNone: return "none";
    case CdmSetup::kSetup1: return "setup1";
    case CdmSetup::kSetup2: return "setup2";
    case CdmSetup::kSetup2Same: return "setup2_same";
  }
  return "?";
}

CdmSetup cdm_setup_from_name(const std::string& name) {
  if (name == "none") return CdmSetup::kNone;
  if (name == "setup1") return CdmSetup::kSetup1;
  if (name == "setup2") return CdmSetup::kSetup2;
  if (name == "setup2_same") return CdmSetup::kSetup2Same;
  throw ConfigError("unknown CDM setup: " + name);
}

const char* eval_condition_name(EvalCondition c) {
  switch (c) {
    case EvalCondition::kClean: return "clean";
    case EvalCondition::kTwoDist: return "2dist";
    case EvalCondition::kFsdLike: return "fsd_like";
    case EvalCondition::kDnsLike: return "dns_like";
    case EvalCondition::kMusanLike: return "musan_like";
    case EvalCondition::kGaussian: return "gaussian";
    case EvalCondition::kReverberation: return "reverberation";
  }
  return "?";
}

EvalCondition eval_condition_from_name(const std::string& name) {
  for (int i = 0; i <= static_cast<int>(EvalCondition::kReverberation); ++i) {
    auto c = static_cast<EvalCondition>(i);
    if (name == eval_condition_name(c)) return c;
  }
  throw ConfigError("unknown eval condition: " + name);
}

RoomSpec sample_room(Rng& rng, const AugmentPolicy& policy) {
  RoomSpec room;
  for (int i = 0; i < 3; ++i)
    room.dims[i] = rng.uniform(policy.room_dim_min_m, policy.room_dim_max_m);
  room.absorption =
      rng.uniform(policy.room_absorption_min, policy.room_absorption_max);
  room.max_order = policy.room_max_order;
  const double margin = 0.5;
  for (int attempt = 0; attempt < 100; ++attempt) {
    for (int i = 0; i < 3; ++i) {
      room.src[i] = rng.uniform(margin, room.dims[i] - margin);
      room.mic[i] = rng.uniform(margin, room.dims[i] - margin);
    }
    double d2 = 0.0;
    for (int i = 0; i < 3; ++i) {
      const double d = room.src[i] - room.mic[i];
      d2 += d * d;
    }
    if (d2 > 0.3 * 0.3) return room;
  }
  throw GeometryError("sample_room: could not place source and microphone");
}

namespace {

const BankName kInDomainBanks[] = {BankName::kMusanLike, BankName::kGaussian,
                                   BankName::kWhamLike};

int bank_to_class(BankName b) {
  switch (b) {
    case BankName::kMusanLike: return 0;
    case BankName::kGaussian: return 1;
    case BankName::kWhamLike: return 2;
    default: return -1;  // held-out banks have no label class
  }
}

int non_additive_to_class(NonAdditiveKind k) {
  switch (k) {
    case NonAdditiveKind::kReverberation: return 3;
    case NonAdditiveKind::kPitchShift: return 4;
    case NonAdditiveKind::kBandReject: return 5;
  }
  return -1;
}

AdditivePart sample_additive(Rng& rng, const AugmentPolicy& policy,
                             const NoiseBanks& banks) {
  AdditivePart part;
  part.bank = kInDomainBanks[rng.uniform_int(3)];
  part.snr_db = rng.uniform(policy.snr_min_db, policy.snr_max_db);
  part.clip_index =
      static_cast<int>(rng.uniform_int(banks.get(part.bank).clips.size()));
  part.crop_offset = rng.next_u64();
  return part;
}

NonAdditivePart sample_non_additive(Rng& rng, const AugmentPolicy& policy) {
  NonAdditivePart part;
  switch (rng.uniform_int(3)) {
    case 0:
      part.kind = NonAdditiveKind::kReverberation;
      part.room = sample_room(rng, policy);
      break;
    case 1:
      part.kind = NonAdditiveKind::kPitchShift;
      part.cents = rng.uniform(-policy.pitch_max_cents, policy.pitch_max_cents);
      break;
    default: {
      part.kind = NonAdditiveKind::kBandReject;
      part.f_center = rng.uniform(policy.band_f_min_hz,
                                  policy.band_f_max_frac * policy.sample_rate);
      const double q = rng.uniform(policy.band_q_min, policy.band_q_max);
      part.bandwidth = part.f_center / q;
      break;
    }
  }
  return part;
}

// RMS-preserving reverberation: image-method RIR convolution rescaled to
// the input level so reverb changes structure, not loudness.
Waveform apply_reverb(const Waveform& wave, const RoomSpec& room) {
  Rir rir = image_method_rir(room, wave.sample_rate);
  Waveform out = convolve_trunc(wave, rir);
  const double in_rms = rms(wave), out_rms = rms(out);
  if (out_rms > 0.0) {
    const double g = in_rms / out_rms;
    for (auto& v : out.samples) v *= g;
  }
  return out;
}

}  // namespace

DistortionSpec sample_spec(Rng& rng, const AugmentPolicy& policy,
                           const NoiseBanks& banks) {
  policy.validate();
  DistortionSpec spec;
  spec.rng_provenance = rng.key();

  const double u = rng.uniform();
  const double c1 = policy.p_clean;
  const double c2 = c1 + policy.p_add_only;
  const double c3 = c2 + policy.p_nonadd_only;
  if (u < c1) {
    // clean: no entries
  } else if (u < c2) {
    spec.additive = sample_additive(rng, policy, banks);
  } else if (u < c3) {
    spec.non_additive = sample_non_additive(rng, policy);
  } else {
    spec.non_additive = sample_non_additive(rng, policy);
    spec.additive = sample_additive(rng, policy, banks);
  }
  return spec;
}

std::pair<Waveform, DistortionLabel> apply_spec(const Waveform& utt,
                                                const DistortionSpec& spec,
                                                const NoiseBanks& banks) {
  validate_waveform(utt, "apply_spec");
  DistortionLabel label;
  Waveform wave = utt;

  if (spec.non_additive) {
    const auto& na = *spec.non_additive;
    switch (na.kind) {
      case NonAdditiveKind::kReverberation:
        wave = apply_reverb(wave, na.room);
        break;
      case NonAdditiveKind::kPitchShift:
        wave = pitch_shift(wave, na.cents);
        break;
      case NonAdditiveKind::kBandReject:
        wave = band_reject(wave, na.f_center, na.bandwidth);
        break;
    }
    label.bits[non_additive_to_class(na.kind)] = 1;
  }

  if (spec.additive) {
    const auto& add = *spec.additive;
    const NoiseBank& bank = banks.get(add.bank);
    if (bank.heldout)
      throw PolicyError(std::string("apply_spec: held-out bank '") +
                        bank_name_str(add.bank) +
                        "' is not allowed on the training path");
    if (add.rir_applied)
      throw PolicyError(
          "apply_spec: RIR-paired additive noise is an evaluation-only "
          "construction");
    const Waveform& clip = bank.clips.at(
        static_cast<size_t>(add.clip_index) % bank.clips.size());
    wave = mix_at_snr_offset(wave, clip, add.snr_db,
                             add.crop_offset % clip.size());
    label.bits[bank_to_class(add.bank)] = 1;
  }

  if (!spec.additive && !spec.non_additive) label.bits[kCleanClass] = 1;

  if (wave.size() != utt.size())
    throw ShapeError("apply_spec: length not preserved");
  return {std::move(wave), label};
}

CdmPair make_cdm_pair(const Waveform& utt, CdmSetup setup,
                      const NoiseBanks& banks, const AugmentPolicy& policy,
                      const Rng& rng) {
  CdmPair pair;
  pair.setup = setup;

  switch (setup) {
    case CdmSetup::kNone: {
      pair.teacher_wave = utt;
      pair.student_wave = utt;
      pair.student_label = DistortionLabel::clean_label();
      break;
    }
    case CdmSetup::kSetup1: {
      Rng srng = rng.fork("student");
      pair.student_spec = sample_spec(srng, policy, banks);
      auto [wave, label] = apply_spec(utt, pair.student_spec, banks);
      pair.teacher_wave = utt;  // clean target
      pair.student_wave = std::move(wave);
      pair.student_label = label;
      break;
    }
    case CdmSetup::kSetup2: {
      Rng trng = rng.fork("teacher");
      Rng srng = rng.fork("student");
      pair.teacher_spec = sample_spec(trng, policy, banks);
      pair.student_spec = sample_spec(srng, policy, banks);
      pair.teacher_wave = apply_spec(utt, pair.teacher_spec, banks).first;
      auto [wave, label] = apply_spec(utt, pair.student_spec, banks);
      pair.student_wave = std::move(wave);
      pair.student_label = label;
      break;
    }
    case CdmSetup::kSetup2Same: {
      Rng srng = rng.fork("student");
      pair.student_spec = sample_spec(srng, policy, banks);
      pair.teacher_spec = pair.student_spec;
      auto [wave, label] = apply_spec(utt, pair.student_spec, banks);
      pair.teacher_wave = wave;  // identical draw, sample-for-sample
      pair.student_wave = std::move(wave);
      pair.student_label = label;
      break;
    }
  }

  if (pair.teacher_wave.size() != utt.size() ||
      pair.student_wave.size() != utt.size())
    throw ShapeError("make_cdm_pair: length not preserved");
  return pair;
}

Waveform build_eval_condition(const Waveform& utt, EvalCondition condition,
                              const NoiseBanks& banks,
                              const AugmentPolicy& policy, Rng& rng,
                              DistortionSpec* diag) {
  if (diag) *diag = DistortionSpec{};
  switch (condition) {
    case EvalCondition::kClean:
      return utt;
    case EvalCondition::kTwoDist: {
      DistortionSpec spec = sample_spec(rng, policy, banks);
      if (diag) *diag = spec;
      return apply_spec(utt, spec, banks).first;
    }
    case EvalCondition::kMusanLike:
    case EvalCondition::kGaussian: {
      DistortionSpec spec;
      AdditivePart part;
      part.bank = condition == EvalCondition::kMusanLike ? BankName::kMusanLike
                                                         : BankName::kGaussian;
      part.snr_db = rng.uniform(policy.snr_min_db, policy.snr_max_db);
      part.clip_index =
          static_cast<int>(rng.uniform_int(banks.get(part.bank).clips.size()));
      part.crop_offset = rng.next_u64();
      spec.additive = part;
      if (diag) *diag = spec;
      return apply_spec(utt, spec, banks).first;
    }
    case EvalCondition::kReverberation: {
      DistortionSpec spec;
      NonAdditivePart part;
      part.kind = NonAdditiveKind::kReverberation;
      part.room = sample_room(rng, policy);
      spec.non_additive = part;
      if (diag) *diag = spec;
      return apply_spec(utt, spec, banks).first;
    }
    case EvalCondition::kFsdLike: {
      // One held-out background noise; single-distortion setting.
      const NoiseBank& bank = banks.get(BankName::kFsdLike);
      AdditivePart part;
      part.bank = BankName::kFsdLike;
      part.snr_db = rng.uniform(policy.snr_min_db, policy.snr_max_db);
      part.clip_index = static_cast<int>(rng.uniform_int(bank.clips.size()));
      part.crop_offset = rng.next_u64();
      if (diag) diag->additive = part;
      const Waveform& clip = bank.clips[part.clip_index];
      return mix_at_snr_offset(utt, clip, part.snr_db,
                               part.crop_offset % clip.size());
    }
    case EvalCondition::kDnsLike: {
      // Held-out background noise plus room impulse response.
      const NoiseBank& bank = banks.get(BankName::kDnsLike);
      AdditivePart part;
      part.bank = BankName::kDnsLike;
      part.rir_applied = true;
      part.room = sample_room(rng, policy);
      part.snr_db = rng.uniform(policy.snr_min_db, policy.snr_max_db);
      part.clip_index = static_cast<int>(rng.uniform_int(bank.clips.size()));
      part.crop_offset = rng.next_u64();
      if (diag) diag->additive = part;
      Waveform reverbed = apply_reverb(utt, part.room);
      const Waveform& clip = bank.clips[part.clip_index];
      return mix_at_snr_offset(reverbed, clip, part.snr_db,
                               part.crop_offset % clip.size());
    }
  }
  throw ConfigError("build_eval_condition: unknown condition");
}

}  // namespace rkd
