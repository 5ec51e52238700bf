// rkd/augment/augmentor.h
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

#ifndef RKD_AUGMENT_AUGMENTOR_H_
#define RKD_AUGMENT_AUGMENTOR_H_

#include <array>
#include <optional>
#include <string>
#include <utility>

#include <json.hpp>

#include "rkd/audio/rir.h"
#include "rkd/audio/waveform.h"
#include "rkd/common/rng.h"
#include "rkd/corpus/synth_corpus.h"

namespace rkd {

// Distortion classes, in label order.
inline constexpr int kNumDistortionClasses = 7;
inline constexpr const char* kDistortionClassNames[kNumDistortionClasses] = {
    "musan_like", "gaussian",    "wham_like", "reverberation",
    "pitch_shift", "band_reject", "clean"};
inline constexpr int kCleanClass = 6;

// Multi-hot vector over the seven distortion classes.
struct DistortionLabel {
  std::array<uint8_t, kNumDistortionClasses> bits{};

  static DistortionLabel clean_label();
  bool is_clean() const { return bits[kCleanClass] != 0; }
  // Checks the structural invariants (clean exclusivity, at most one
  // additive and one non-additive class set).
  bool valid() const;
  nlohmann::json to_json() const;
};

enum class NonAdditiveKind { kReverberation, kPitchShift, kBandReject };
const char* non_additive_kind_name(NonAdditiveKind k);

struct AdditivePart {
  BankName bank = BankName::kGaussian;
  double snr_db = 15.0;
  int clip_index = 0;
  uint64_t crop_offset = 0;
  bool rir_applied = false;  // held-out dns evaluation pairs noise with a RIR
  RoomSpec room;             // meaningful only when rir_applied

  bool operator==(const AdditivePart& o) const;
};

struct NonAdditivePart {
  NonAdditiveKind kind = NonAdditiveKind::kPitchShift;
  RoomSpec room;           // reverberation
  double cents = 0.0;      // pitch shift
  double f_center = 0.0;   // band rejection
  double bandwidth = 0.0;  // band rejection

  bool operator==(const NonAdditivePart& o) const;
};

// A sampled augmentation plan.  All randomness is captured at sampling
// time, so applying a spec is deterministic.
struct DistortionSpec {
  std::optional<AdditivePart> additive;
  std::optional<NonAdditivePart> non_additive;
  uint64_t rng_provenance = 0;

  bool operator==(const DistortionSpec& o) const;
  nlohmann::json to_json() const;
};

struct AugmentPolicy {
  double p_clean = 0.25;
  double p_add_only = 0.25;
  double p_nonadd_only = 0.25;
  double p_both = 0.25;
  double snr_min_db = 10.0;
  double snr_max_db = 20.0;
  double pitch_max_cents = 300.0;
  double band_f_min_hz = 200.0;
  double band_f_max_frac = 0.4;  // of the sample rate
  double band_q_min = 1.0;
  double band_q_max = 5.0;
  double room_dim_min_m = 3.0;
  double room_dim_max_m = 8.0;
  double room_absorption_min = 0.2;
  double room_absorption_max = 0.7;
  int room_max_order = 3;
  int sample_rate = 8000;

  void validate() const;
  nlohmann::json to_json() const;
  static AugmentPolicy from_json(const nlohmann::json& j);
};

enum class CdmSetup { kNone, kSetup1, kSetup2, kSetup2Same };
const char* cdm_setup_name(CdmSetup s);
CdmSetup cdm_setup_from_name(const std::string& name);

struct CdmPair {
  Waveform teacher_wave;
  Waveform student_wave;
  DistortionLabel student_label;
  CdmSetup setup = CdmSetup::kNone;
  DistortionSpec teacher_spec;
  DistortionSpec student_spec;
};

enum class EvalCondition {
  kClean,
  kTwoDist,
  kFsdLike,
  kDnsLike,
  kMusanLike,
  kGaussian,
  kReverberation
};
const char* eval_condition_name(EvalCondition c);
EvalCondition eval_condition_from_name(const std::string& name);
// The four probe-evaluation conditions, in report order.
inline constexpr EvalCondition kProbeConditions[] = {
    EvalCondition::kClean, EvalCondition::kTwoDist, EvalCondition::kFsdLike,
    EvalCondition::kDnsLike};
// The six visualization conditions, in plot order.
inline constexpr EvalCondition kVizConditions[] = {
    EvalCondition::kClean,     EvalCondition::kMusanLike,
    EvalCondition::kGaussian,  EvalCondition::kReverberation,
    EvalCondition::kFsdLike,   EvalCondition::kDnsLike};

RoomSpec sample_room(Rng& rng, const AugmentPolicy& policy);

// Draws a distortion plan: clean / additive-only / non-additive-only / both
// with the policy's probabilities.  Additive draws come from the in-domain
// banks only; held-out banks are never referenced here.
DistortionSpec sample_spec(Rng& rng, const AugmentPolicy& policy,
                           const NoiseBanks& banks);

// Applies a spec (non-additive effect first, then additive mixing).  Length
// is preserved.  Specs referencing held-out banks are rejected; held-out
// audio is only reachable through build_eval_condition.
std::pair<Waveform, DistortionLabel> apply_spec(const Waveform& utt,
                                                const DistortionSpec& spec,
                                                const NoiseBanks& banks);

// Builds the teacher/student input pair for one utterance under a CDM setup.
// Pass a fresh substream per (utterance, step); the draws inside are forked
// from it by role.
CdmPair make_cdm_pair(const Waveform& utt, CdmSetup setup,
                      const NoiseBanks& banks, const AugmentPolicy& policy,
                      const Rng& rng);

// Builds one evaluation condition; `diag` (optional) receives the applied
// plan for auditing.  This is the only path that may touch held-out banks.
Waveform build_eval_condition(const Waveform& utt, EvalCondition condition,
                              const NoiseBanks& banks,
                              const AugmentPolicy& policy, Rng& rng,
                              DistortionSpec* diag = nullptr);

}  // namespace rkd

#endif  // RKD_AUGMENT_AUGMENTOR_H_
