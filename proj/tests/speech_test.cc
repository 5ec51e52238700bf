// tests/speech_test.cc
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

#include <cmath>

#include <doctest.h>

#include "rkd/audio/dsp.h"
#include "rkd/common/error.h"
#include "rkd/speech/features.h"
#include "rkd/speech/kmeans.h"
#include "rkd/speech/teacher.h"

using namespace rkd;

namespace {

TeacherConfig tiny_teacher_cfg() {
  TeacherConfig cfg;
  cfg.kmeans_k = 8;
  cfg.kmeans_iters = 10;
  cfg.batch_size = 2;
  return cfg;
}

CorpusConfig tiny_corpus_cfg() {
  CorpusConfig cfg;
  cfg.n_classes = 3;
  cfg.n_train = 16;
  cfg.n_dev = 4;
  cfg.n_test = 4;
  cfg.dur_min_s = 0.4;
  cfg.dur_max_s = 0.6;
  cfg.noise_clips_per_bank = 2;
  cfg.noise_clip_s = 1.0;
  return cfg;
}

}  // namespace

TEST_CASE("kmeans: K=1 is the global mean; inertia never increases") {
  Rng rng(1);
  std::vector<std::vector<double>> pts;
  std::vector<double> mean(3, 0.0);
  for (int i = 0; i < 200; ++i) {
    std::vector<double> p = {rng.normal(), rng.normal(), rng.normal()};
    for (int j = 0; j < 3; ++j) mean[j] += p[j] / 200.0;
    pts.push_back(std::move(p));
  }
  auto one = kmeans_fit(pts, 1, 5, 42);
  for (int j = 0; j < 3; ++j)
    CHECK(one.centroids[0][j] == doctest::Approx(mean[j]).epsilon(1e-9));

  auto multi = kmeans_fit(pts, 5, 20, 42);
  for (size_t i = 1; i < multi.inertia_trace.size(); ++i)
    CHECK(multi.inertia_trace[i] <= multi.inertia_trace[i - 1] + 1e-9);
}

TEST_CASE("kmeans: recovers well-separated blobs") {
  Rng rng(2);
  const std::vector<std::vector<double>> centers = {
      {0.0, 0.0}, {10.0, 0.0}, {0.0, 10.0}};
  const double sigma = 0.5;
  std::vector<std::vector<double>> pts;
  for (int c = 0; c < 3; ++c)
    for (int i = 0; i < 100; ++i)
      pts.push_back({centers[c][0] + sigma * rng.normal(),
                     centers[c][1] + sigma * rng.normal()});
  auto fit = kmeans_fit(pts, 3, 25, 7);
  for (const auto& center : centers) {
    double best = 1e18;
    for (const auto& got : fit.centroids) {
      const double d = std::hypot(got[0] - center[0], got[1] - center[1]);
      best = std::min(best, d);
    }
    CHECK(best <= 0.1 * sigma * 3);  // within 0.1 sigma per-dim tolerance
  }
  CHECK_THROWS_AS(kmeans_fit(pts, 0, 5, 1), ConfigError);
  CHECK_THROWS_AS(kmeans_fit(pts, static_cast<int>(pts.size()) + 1, 5, 1),
                  ConfigError);
}

TEST_CASE("logmel: frame count honored, finite values") {
  Rng rng(3);
  Waveform w = gaussian_noise(4000, 0.2, rng, 8000);
  auto frames = logmel_frames(w, 20, 61);
  REQUIRE(frames.size() == 61);
  for (const auto& f : frames) {
    REQUIRE(f.size() == 20);
    for (double v : f) CHECK(std::isfinite(v));
  }
}

TEST_CASE("frame mask: coverage fraction and span structure") {
  Rng rng(4);
  auto mask = sample_frame_mask(100, 0.4, 5, rng);
  int covered = 0;
  for (auto b : mask) covered += b;
  CHECK(covered >= 40);
  CHECK(covered <= 60);  // overlapping spans overshoot a little

  auto none = sample_frame_mask(50, 0.0, 5, rng);
  for (auto b : none) CHECK(b == 0);
}

TEST_CASE("teacher: hidden shapes, frame formula, determinism") {
  TeacherConfig cfg = tiny_teacher_cfg();
  TeacherModel teacher = TeacherModel::create(cfg, 5);

  Rng rng(6);
  Waveform w = gaussian_noise(4000, 0.2, rng, 8000);

  // Conv arithmetic: three valid convolutions (8,8),(8,4),(4,2).
  auto out_len = [](int n, int k, int s) { return (n - k) / s + 1; };
  const int expect =
      out_len(out_len(out_len(4000, 8, 8), 8, 4), 4, 2);
  CHECK(teacher.frames_for_length(4000) == expect);

  auto h1 = teacher.hidden_values(w);
  auto h2 = teacher.hidden_values(w);
  REQUIRE(h1.size() == static_cast<size_t>(cfg.n_layers));
  for (size_t i = 0; i < h1.size(); ++i) {
    CHECK(h1[i].size() == static_cast<size_t>(expect) * cfg.d_model);
    CHECK(h1[i] == h2[i]);  // extraction is pure
  }

  Waveform tiny;
  tiny.sample_rate = 8000;
  tiny.samples.assign(16, 0.1);
  CHECK_THROWS_AS(teacher.hidden_values(tiny), ShapeError);
}

TEST_CASE("teacher: masked loss only counts masked positions") {
  TeacherConfig cfg = tiny_teacher_cfg();
  TeacherModel teacher = TeacherModel::create(cfg, 5);
  Rng rng(7);
  Waveform w = gaussian_noise(4000, 0.2, rng, 8000);
  const int frames = teacher.frames_for_length(4000);

  std::vector<uint8_t> mask(frames, 0);
  mask[3] = mask[4] = 1;
  std::vector<int> labels(frames, 0);
  labels[3] = 1;
  labels[4] = 2;

  nn::NoGradGuard ng;
  nn::Tensor logits =
      teacher.masked_logits(w.samples, nn::Mode::kEval, nullptr, mask);
  std::vector<double> weights(frames, 0.0);
  weights[3] = weights[4] = 1.0;
  const double base = nn::ce_logits(logits, labels, weights).item();

  // Scrambling the labels of unmasked frames cannot change the loss.
  std::vector<int> scrambled = labels;
  for (int t = 0; t < frames; ++t)
    if (!mask[t]) scrambled[t] = (t * 13 + 1) % cfg.kmeans_k;
  const double same = nn::ce_logits(logits, scrambled, weights).item();
  CHECK(base == doctest::Approx(same).epsilon(1e-12));
}

TEST_CASE("teacher pretraining: initial loss near ln K, same seed, adapt 0 steps") {
  CorpusConfig ccfg = tiny_corpus_cfg();
  Corpus corpus = generate_corpus(ccfg, 21);
  TeacherConfig tcfg = tiny_teacher_cfg();

  PseudoLabeler labeler = fit_pseudo_labeler(corpus, tcfg, 21);
  CHECK(labeler.codebook.size() == static_cast<size_t>(tcfg.kmeans_k));

  TeacherModel m1 = TeacherModel::create(tcfg, 33);
  PseudoLabelCache labels = build_label_cache(m1, corpus, labeler);

  auto log = pretrain_teacher(m1, corpus, labels, 12, 33);
  // Untrained softmax over K classes: loss within 10% of ln K.
  CHECK(std::fabs(log.initial_loss - std::log(double(tcfg.kmeans_k))) <=
        0.1 * std::log(double(tcfg.kmeans_k)));

  TeacherModel m2 = TeacherModel::create(tcfg, 33);
  auto log2 = pretrain_teacher(m2, corpus, labels, 12, 33);
  CHECK(nn::checkpoint_param_hash(m1.params()) ==
        nn::checkpoint_param_hash(m2.params()));
  CHECK(log.final_loss == doctest::Approx(log2.final_loss));

  // Zero adaptation steps leave the checkpoint untouched.
  NoiseBanks banks = generate_noise_banks(ccfg, 21);
  AugmentPolicy policy;
  policy.sample_rate = ccfg.sample_rate;
  const std::string before = nn::checkpoint_param_hash(m1.params());
  adapt_teacher(m1, corpus, banks, policy, labels, 0, 99);
  CHECK(nn::checkpoint_param_hash(m1.params()) == before);
}
