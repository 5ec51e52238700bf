// rkd/eval/eval.cc
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

#include "rkd/eval/eval.h"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "rkd/audio/wav_io.h"
#include "rkd/common/error.h"
#include "rkd/common/jsonio.h"

namespace rkd {

using nn::Mode;
using nn::Tensor;

ReprFn make_teacher_extractor(const TeacherModel& teacher) {
  return [&teacher](const Waveform& wave) {
    auto hidden = teacher.hidden_values(wave);
    const auto& last = hidden.back();
    const int d = teacher.config().d_model;
    const int t = static_cast<int>(last.size()) / d;
    std::vector<double> mean(d, 0.0);
    for (int i = 0; i < t; ++i)
      for (int j = 0; j < d; ++j) mean[j] += last[static_cast<size_t>(i) * d + j];
    for (auto& v : mean) v /= t;
    return mean;
  };
}

ReprFn make_student_extractor(const StudentModel& student) {
  return [&student](const Waveform& wave) {
    int t = 0;
    auto z = student.z_values(wave, &t);
    const int d = student.config().d_model;
    std::vector<double> mean(d, 0.0);
    for (int i = 0; i < t; ++i)
      for (int j = 0; j < d; ++j) mean[j] += z[static_cast<size_t>(i) * d + j];
    for (auto& v : mean) v /= t;
    return mean;
  };
}

std::vector<double> extract_repr(const ReprFn& fn, const Waveform& wave) {
  return fn(wave);
}

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw ShapeError("cosine: size mismatch");
  double dot = 0.0, qa = 0.0, qb = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    qa += a[i] * a[i];
    qb += b[i] * b[i];
  }
  return dot / std::max(std::sqrt(qa) * std::sqrt(qb), 1e-12);
}

// ---------------------------------------------------------------------------

ProbeModel ProbeModel::create(int d, int n_classes, uint64_t seed) {
  ProbeModel p;
  p.d_ = d;
  p.n_classes_ = n_classes;
  Rng rng = Rng::substream(seed, "probe_init");
  p.lin_ = nn::Linear::create(p.params_, "probe", d, n_classes, rng);
  return p;
}

ProbeModel ProbeModel::from_checkpoint(const nn::LoadedCheckpoint& ckpt) {
  ProbeModel p;
  p.d_ = ckpt.header.config.at("d");
  p.n_classes_ = ckpt.header.config.at("n_classes");
  Rng rng = Rng::substream(ckpt.header.seed, "probe_init");
  p.lin_ = nn::Linear::create(p.params_, "probe", p.d_, p.n_classes_, rng);
  nn::restore_params(p.params_, ckpt);
  return p;
}

Tensor ProbeModel::logits(const std::vector<std::vector<double>>& reps) const {
  const int n = static_cast<int>(reps.size());
  std::vector<double> flat;
  flat.reserve(static_cast<size_t>(n) * d_);
  for (const auto& r : reps) {
    if (static_cast<int>(r.size()) != d_)
      throw ShapeError("probe: representation dim mismatch");
    flat.insert(flat.end(), r.begin(), r.end());
  }
  Tensor x = Tensor::leaf({n, d_}, std::move(flat));
  return lin_.forward(x);
}

int ProbeModel::predict(const std::vector<double>& rep) const {
  nn::NoGradGuard ng;
  Tensor l = logits({rep});
  int best = 0;
  for (int c = 1; c < n_classes_; ++c)
    if (l.val()[c] > l.val()[best]) best = c;
  return best;
}

void ProbeModel::save(const std::filesystem::path& path,
                      const std::string& kind) const {
  nn::CheckpointHeader header;
  header.kind = kind;
  header.config = {{"d", d_}, {"n_classes", n_classes_}};
  header.config_hash = json_hash(header.config);
  nn::save_checkpoint(path, header, params_);
}

ProbeModel train_probe(const std::vector<std::vector<double>>& reps,
                       const std::vector<int>& labels, int n_classes,
                       const ProbeConfig& cfg) {
  if (reps.empty() || reps.size() != labels.size())
    throw ConfigError("train_probe: empty or mismatched training data");
  ProbeModel probe =
      ProbeModel::create(static_cast<int>(reps[0].size()), n_classes, cfg.seed);
  nn::AdamConfig acfg;
  acfg.lr = cfg.lr;
  nn::Adam opt(probe.params().tensors(), acfg);
  for (int step = 0; step < cfg.steps; ++step) {
    Tensor loss = nn::ce_logits(probe.logits(reps), labels);
    if (std::isnan(loss.item()))
      throw NumericError("train_probe: NaN loss at step " +
                         std::to_string(step));
    nn::backward(loss);
    opt.step();
  }
  return probe;
}

double probe_accuracy(const ProbeModel& probe,
                      const std::vector<std::vector<double>>& reps,
                      const std::vector<int>& labels) {
  if (reps.size() != labels.size())
    throw ShapeError("probe_accuracy: size mismatch");
  nn::NoGradGuard ng;
  Tensor l = probe.logits(reps);
  const int c = probe.n_classes();
  int correct = 0;
  for (size_t i = 0; i < reps.size(); ++i) {
    const double* row = l.val().data() + i * c;
    int best = 0;
    for (int j = 1; j < c; ++j)
      if (row[j] > row[best]) best = j;
    if (best == labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(reps.size());
}

// ---------------------------------------------------------------------------

ConditionCache build_condition_cache(const std::filesystem::path& dir,
                                     const Corpus& corpus,
                                     const NoiseBanks& banks,
                                     const AugmentPolicy& policy,
                                     const std::string& corpus_hash,
                                     uint64_t eval_seed) {
  namespace fs = std::filesystem;
  ConditionCache cache;
  cache.dir = dir;
  cache.corpus_hash = corpus_hash;
  cache.eval_seed = eval_seed;

  auto test = corpus.split_view(Split::kTest);
  std::sort(test.begin(), test.end(),
            [](const Utterance* a, const Utterance* b) { return a->id < b->id; });
  for (const auto* u : test) cache.utt_ids.push_back(u->id);

  Rng root(eval_seed);
  const EvalCondition all[] = {
      EvalCondition::kClean,     EvalCondition::kTwoDist,
      EvalCondition::kFsdLike,   EvalCondition::kDnsLike,
      EvalCondition::kMusanLike, EvalCondition::kGaussian,
      EvalCondition::kReverberation};
  for (EvalCondition cond : all) {
    const std::string cname = eval_condition_name(cond);
    fs::create_directories(dir / cname);
    for (const auto* u : test) {
      Rng rng = root.fork(cname).fork(u->id);
      Waveform w = build_eval_condition(u->wave, cond, banks, policy, rng);
      wav_write(dir / cname / (u->id + ".wav"), w);
    }
    cache.conditions.push_back(cname);
  }

  nlohmann::json manifest = {{"version", kVersionString},
                             {"corpus_hash", corpus_hash},
                             {"eval_seed", eval_seed},
                             {"conditions", cache.conditions},
                             {"utt_ids", cache.utt_ids}};
  save_json(dir / "cache.json", manifest);
  return cache;
}

ConditionCache open_condition_cache(const std::filesystem::path& dir,
                                    const std::string& corpus_hash,
                                    uint64_t eval_seed) {
  const auto manifest_path = dir / "cache.json";
  if (!std::filesystem::exists(manifest_path))
    throw DependencyError("missing evaluation condition cache at " +
                          dir.string());
  nlohmann::json m = load_json(manifest_path);
  if (m.at("corpus_hash") != corpus_hash || m.at("eval_seed") != eval_seed)
    throw PolicyError(
        "condition cache mismatch: cached audio was built for a different "
        "corpus or evaluation seed");
  ConditionCache cache;
  cache.dir = dir;
  cache.corpus_hash = corpus_hash;
  cache.eval_seed = eval_seed;
  cache.utt_ids = m.at("utt_ids").get<std::vector<std::string>>();
  cache.conditions = m.at("conditions").get<std::vector<std::string>>();
  return cache;
}

std::vector<Waveform> ConditionCache::load_condition(EvalCondition cond) const {
  const std::string cname = eval_condition_name(cond);
  std::vector<Waveform> out;
  out.reserve(utt_ids.size());
  for (const auto& id : utt_ids)
    out.push_back(wav_read(dir / cname / (id + ".wav")));
  return out;
}

// ---------------------------------------------------------------------------

double invariance_score(const ReprFn& fn,
                        const std::vector<std::vector<Waveform>>& by_condition) {
  const size_t n_cond = by_condition.size();
  if (n_cond < 2)
    throw ConfigError("invariance_score: need at least 2 conditions");
  const size_t n_utt = by_condition[0].size();
  for (const auto& c : by_condition)
    if (c.size() != n_utt)
      throw ShapeError("invariance_score: condition sets differ in size");

  double total = 0.0;
  for (size_t u = 0; u < n_utt; ++u) {
    std::vector<std::vector<double>> reps;
    reps.reserve(n_cond);
    for (const auto& c : by_condition) reps.push_back(fn(c[u]));
    double acc = 0.0;
    int pairs = 0;
    for (size_t i = 0; i < n_cond; ++i)
      for (size_t j = i + 1; j < n_cond; ++j) {
        acc += cosine(reps[i], reps[j]);
        ++pairs;
      }
    total += acc / pairs;
  }
  return total / static_cast<double>(n_utt);
}

void build_distortion_probe_set(const std::vector<const Utterance*>& utts,
                                const NoiseBanks& banks,
                                const AugmentPolicy& policy, uint64_t eval_seed,
                                int variants_per_utt,
                                std::vector<Waveform>* waves,
                                std::vector<DistortionLabel>* labels) {
  Rng root = Rng::substream(eval_seed, "distortion_probe");
  for (const auto* u : utts) {
    for (int v = 0; v < variants_per_utt; ++v) {
      Rng rng = root.fork(u->id, static_cast<uint64_t>(v));
      DistortionSpec spec = sample_spec(rng, policy, banks);
      auto [wave, label] = apply_spec(u->wave, spec, banks);
      waves->push_back(std::move(wave));
      labels->push_back(label);
    }
  }
}

DistortionProbeResult distortion_probe(
    const ReprFn& fn, const std::vector<Waveform>& waves,
    const std::vector<DistortionLabel>& labels, const ProbeConfig& cfg) {
  if (waves.size() != labels.size() || waves.size() < 4)
    throw ConfigError("distortion_probe: need a labeled dataset");

  std::vector<std::vector<double>> reps;
  reps.reserve(waves.size());
  for (const auto& w : waves) reps.push_back(fn(w));
  const int d = static_cast<int>(reps[0].size());

  // Even indices train, odd indices test (interleaved split keeps both
  // halves distribution-matched).
  std::vector<std::vector<double>> train_x, test_x;
  std::vector<std::vector<double>> train_y;
  std::vector<const DistortionLabel*> test_y;
  for (size_t i = 0; i < reps.size(); ++i) {
    std::vector<double> t(kNumDistortionClasses);
    for (int c = 0; c < kNumDistortionClasses; ++c)
      t[c] = static_cast<double>(labels[i].bits[c]);
    if (i % 2 == 0) {
      train_x.push_back(reps[i]);
      train_y.push_back(std::move(t));
    } else {
      test_x.push_back(reps[i]);
      test_y.push_back(&labels[i]);
    }
  }

  // Multi-label linear probe trained with BCE.
  ProbeModel probe = ProbeModel::create(d, kNumDistortionClasses, cfg.seed);
  nn::AdamConfig acfg;
  acfg.lr = cfg.lr;
  nn::Adam opt(probe.params().tensors(), acfg);
  std::vector<double> flat_targets;
  for (const auto& t : train_y)
    flat_targets.insert(flat_targets.end(), t.begin(), t.end());
  for (int step = 0; step < cfg.steps; ++step) {
    Tensor loss = nn::bce_multilabel(probe.logits(train_x), flat_targets);
    nn::backward(loss);
    opt.step();
  }

  DistortionProbeResult result;
  nn::NoGradGuard ng;
  Tensor l = probe.logits(test_x);
  std::array<int64_t, kNumDistortionClasses> class_correct{};
  int64_t exact = 0;
  for (size_t i = 0; i < test_x.size(); ++i) {
    bool all_match = true;
    for (int c = 0; c < kNumDistortionClasses; ++c) {
      const double p = l.val()[i * kNumDistortionClasses + c];
      const int pred = p > 0.0 ? 1 : 0;  // sigmoid(p) > 0.5
      const int truth = test_y[i]->bits[c];
      if (pred == truth)
        ++class_correct[c];
      else
        all_match = false;
    }
    if (all_match) ++exact;
  }
  const double n = static_cast<double>(test_x.size());
  result.exact_match = exact / n;
  double mean = 0.0;
  for (int c = 0; c < kNumDistortionClasses; ++c) {
    result.per_class[c] = class_correct[c] / n;
    mean += result.per_class[c];
  }
  result.per_class_mean = mean / kNumDistortionClasses;
  return result;
}

// ---------------------------------------------------------------------------

EmbeddingMatrix split_average_embeddings(
    const ReprFn& fn, const std::vector<std::string>& utt_ids,
    const std::map<std::string, std::vector<Waveform>>& waves_by_condition,
    int n_splits) {
  const size_t n = utt_ids.size();
  if (static_cast<int>(n) < n_splits)
    throw ConfigError("split_average_embeddings: fewer utterances (" +
                      std::to_string(n) + ") than splits (" +
                      std::to_string(n_splits) + ")");
  for (const auto& [cname, waves] : waves_by_condition)
    if (waves.size() != n)
      throw ShapeError("split_average_embeddings: condition '" + cname +
                       "' wave count mismatch");

  // Contiguous blocks over the ascending-id order; identical across
  // conditions.
  std::vector<std::pair<size_t, size_t>> blocks;
  for (int s = 0; s < n_splits; ++s) {
    const size_t lo = s * n / n_splits;
    const size_t hi = (s + 1) * n / n_splits;
    blocks.push_back({lo, hi});
  }

  EmbeddingMatrix m;
  for (const auto& [cname, waves] : waves_by_condition) {
    std::vector<std::vector<double>> reps;
    reps.reserve(n);
    for (const auto& w : waves) reps.push_back(fn(w));
    m.d = static_cast<int>(reps[0].size());
    for (int s = 0; s < n_splits; ++s) {
      const auto [lo, hi] = blocks[s];
      std::vector<double> mean(m.d, 0.0);
      for (size_t i = lo; i < hi; ++i)
        for (int j = 0; j < m.d; ++j) mean[j] += reps[i][j];
      for (auto& v : mean) v /= static_cast<double>(hi - lo);
      m.rows.push_back(std::move(mean));
      m.split_index.push_back(s);
      m.condition.push_back(cname);
    }
  }
  return m;
}

void write_embedding_csv(const std::filesystem::path& path,
                         const EmbeddingMatrix& m) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "split,condition";
  for (int j = 0; j < m.d; ++j) out << ",e" << j;
  out << "\n";
  for (size_t i = 0; i < m.rows.size(); ++i) {
    out << m.split_index[i] << "," << m.condition[i];
    char buf[32];
    for (int j = 0; j < m.d; ++j) {
      std::snprintf(buf, sizeof(buf), ",%.9g", m.rows[i][j]);
      out << buf;
    }
    out << "\n";
  }
}

void write_tsne_csv(const std::filesystem::path& path, const EmbeddingMatrix& m,
                    const std::vector<std::array<double, 2>>& points) {
  if (points.size() != m.rows.size())
    throw ShapeError("write_tsne_csv: row count mismatch");
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "split,condition,x,y\n";
  char buf[80];
  for (size_t i = 0; i < points.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%d,%s,%.9g,%.9g", m.split_index[i],
                  m.condition[i].c_str(), points[i][0], points[i][1]);
    out << buf << "\n";
  }
}

}  // namespace rkd
