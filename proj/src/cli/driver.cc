// rkd/cli/driver.cc
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

#include "rkd/cli/driver.h"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <fstream>
#include <functional>
#include <mutex>
#include <thread>

#include "rkd/audio/wav_io.h"
#include "rkd/common/error.h"
#include "rkd/common/jsonio.h"
#include "rkd/eval/tsne.h"

namespace rkd {

namespace fs = std::filesystem;

nlohmann::json EvalSettings::to_json() const {
  return {{"variants_per_utt", variants_per_utt},
          {"n_splits", n_splits},
          {"tsne_perplexity", tsne_perplexity},
          {"tsne_iters", tsne_iters}};
}

EvalSettings EvalSettings::from_json(const nlohmann::json& j) {
  EvalSettings e;
  e.variants_per_utt = j.value("variants_per_utt", e.variants_per_utt);
  e.n_splits = j.value("n_splits", e.n_splits);
  e.tsne_perplexity = j.value("tsne_perplexity", e.tsne_perplexity);
  e.tsne_iters = j.value("tsne_iters", e.tsne_iters);
  return e;
}

nlohmann::json RunConfig::to_json() const {
  return {{"master_seed", master_seed},
          {"corpus", corpus.to_json()},
          {"augment", augment.to_json()},
          {"teacher", teacher.to_json()},
          {"student", student.to_json()},
          {"distill", distill.to_json()},
          {"probe",
           {{"steps", probe.steps}, {"lr", probe.lr}, {"seed", probe.seed}}},
          {"eval", eval.to_json()},
          {"matrix_seeds", matrix_seeds}};
}

RunConfig RunConfig::from_json(const nlohmann::json& j) {
  RunConfig c;
  c.master_seed = j.value("master_seed", c.master_seed);
  if (j.contains("corpus")) c.corpus = CorpusConfig::from_json(j.at("corpus"));
  if (j.contains("augment"))
    c.augment = AugmentPolicy::from_json(j.at("augment"));
  if (j.contains("teacher"))
    c.teacher = TeacherConfig::from_json(j.at("teacher"));
  if (j.contains("student"))
    c.student = StudentConfig::from_json(j.at("student"));
  if (j.contains("distill"))
    c.distill = DistillConfig::from_json(j.at("distill"));
  if (j.contains("probe")) {
    c.probe.steps = j.at("probe").value("steps", c.probe.steps);
    c.probe.lr = j.at("probe").value("lr", c.probe.lr);
    c.probe.seed = j.at("probe").value("seed", c.probe.seed);
  }
  if (j.contains("eval")) c.eval = EvalSettings::from_json(j.at("eval"));
  c.matrix_seeds = j.value("matrix_seeds", c.matrix_seeds);
  return c;
}

RunConfig RunConfig::load(const fs::path& path) {
  return from_json(load_json(path));
}

uint64_t RunConfig::seed_for(int seed_index) const {
  return Rng(master_seed).fork("seed", static_cast<uint64_t>(seed_index)).key();
}

uint64_t RunConfig::eval_seed() const {
  return Rng(master_seed).fork("eval").key();
}

std::string variant_id(const VariantSpec& v) {
  std::string id = cdm_setup_name(v.setup);
  if (v.setup == CdmSetup::kSetup2Same) id = "setup2same";
  if (v.dat) id += "-dat";
  if (v.adapted_teacher) id += "-Ta";
  return id;
}

std::string variant_alias(const VariantSpec& v) {
  std::string base;
  switch (v.setup) {
    case CdmSetup::kNone: base = v.dat ? "E1" : "S1"; break;
    case CdmSetup::kSetup1: base = v.dat ? "S5" : "S2"; break;
    case CdmSetup::kSetup2Same: base = v.dat ? "E3" : "S3"; break;
    case CdmSetup::kSetup2: base = v.dat ? "S6" : "S4"; break;
  }
  if (v.adapted_teacher) base += "p";
  return base;
}

std::vector<VariantSpec> full_variant_grid() {
  std::vector<VariantSpec> grid;
  const CdmSetup setups[] = {CdmSetup::kNone, CdmSetup::kSetup1,
                             CdmSetup::kSetup2Same, CdmSetup::kSetup2};
  for (bool adapted : {false, true})
    for (CdmSetup setup : setups)
      for (bool dat : {false, true})
        grid.push_back({setup, dat, adapted});
  return grid;
}

double EvalReport::mean_distorted_acc() const {
  return (condition_acc.at("2dist") + condition_acc.at("fsd_like") +
          condition_acc.at("dns_like")) /
         3.0;
}

nlohmann::json EvalReport::to_json() const {
  return {{"version", kVersionString},
          {"model_id", model_id},
          {"seed_index", seed_index},
          {"condition_acc", condition_acc},
          {"invariance", invariance},
          {"distortion_probe_exact", distortion_probe_exact},
          {"distortion_probe_per_class_mean", distortion_probe_per_class_mean},
          {"config_hash", config_hash}};
}

EvalReport EvalReport::from_json(const nlohmann::json& j) {
  EvalReport r;
  r.model_id = j.at("model_id");
  r.seed_index = j.at("seed_index");
  r.condition_acc =
      j.at("condition_acc").get<std::map<std::string, double>>();
  r.invariance = j.at("invariance");
  r.distortion_probe_exact = j.at("distortion_probe_exact");
  r.distortion_probe_per_class_mean = j.at("distortion_probe_per_class_mean");
  r.config_hash = j.at("config_hash");
  return r;
}

std::string model_id_for(const VariantSpec& variant, int seed_index) {
  return variant_id(variant) + "_s" + std::to_string(seed_index);
}

std::string teacher_model_id(bool adapted, int seed_index) {
  return std::string(adapted ? "teacher-adapted" : "teacher-base") + "_s" +
         std::to_string(seed_index);
}

namespace {

// Stage markers make reruns idempotent: same config reuses artifacts,
// different config refuses to clobber them.
bool artifact_ready(const fs::path& marker, const std::string& cfg_hash) {
  if (!fs::exists(marker)) return false;
  nlohmann::json j = load_json(marker);
  if (j.value("config_hash", "") != cfg_hash)
    throw ConfigError("config-hash mismatch at " + marker.string() +
                      ": refusing to overwrite artifacts from a different "
                      "configuration");
  return true;
}

void mark_done(const fs::path& marker, const std::string& cfg_hash) {
  save_json(marker, {{"version", kVersionString}, {"config_hash", cfg_hash}});
}

void write_jsonl(const fs::path& path, const std::string& cfg_hash,
                 const std::vector<nlohmann::json>& rows) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << nlohmann::json{{"version", kVersionString}, {"config_hash", cfg_hash}}
             .dump()
      << "\n";
  for (const auto& row : rows) out << row.dump() << "\n";
}

void run_parallel(std::vector<std::function<void()>> tasks, int jobs) {
  if (jobs <= 1) {
    for (auto& t : tasks) t();
    return;
  }
  std::atomic<size_t> next{0};
  std::vector<std::thread> workers;
  std::atomic<bool> failed{false};
  std::string first_error;
  std::mutex err_mu;
  const int n_workers = std::min<int>(jobs, static_cast<int>(tasks.size()));
  for (int w = 0; w < n_workers; ++w) {
    workers.emplace_back([&] {
      for (;;) {
        const size_t i = next.fetch_add(1);
        if (i >= tasks.size() || failed.load()) return;
        try {
          tasks[i]();
        } catch (const std::exception& e) {
          std::lock_guard<std::mutex> lock(err_mu);
          if (!failed.exchange(true)) first_error = e.what();
          return;
        }
      }
    });
  }
  for (auto& w : workers) w.join();
  if (failed.load()) throw Error("worker", first_error);
}

}  // namespace

void stage_gen_corpus(const RunConfig& cfg, const fs::path& out) {
  fs::create_directories(out);
  const fs::path cfg_path = out / "config.json";
  nlohmann::json cfg_json = cfg.to_json();
  if (fs::exists(cfg_path)) {
    if (json_hash(load_json(cfg_path)) != cfg.hash())
      throw ConfigError(
          "config-hash mismatch: " + cfg_path.string() +
          " belongs to a different configuration; refusing to overwrite");
  } else {
    save_json(cfg_path, cfg_json);
  }

  const fs::path marker = out / "corpus" / "done.json";
  if (artifact_ready(marker, cfg.hash())) return;
  Corpus corpus = generate_corpus(cfg.corpus, cfg.master_seed);
  NoiseBanks banks = generate_noise_banks(cfg.corpus, cfg.master_seed);
  save_corpus(out / "corpus", corpus, banks);
  mark_done(marker, cfg.hash());
}

LoadedRun open_run(const RunConfig& cfg, const fs::path& out) {
  LoadedRun run;
  run.out = out;
  run.cfg = cfg;
  auto loaded = load_corpus(out / "corpus");
  run.corpus = std::move(loaded.corpus);
  run.banks = std::move(loaded.banks);
  run.corpus_hash = loaded.manifest_hash;
  run.policy = cfg.augment;
  run.policy.sample_rate = run.corpus.config.sample_rate;
  run.policy.validate();
  return run;
}

namespace {

fs::path teacher_dir(const LoadedRun& run, int seed_index) {
  return run.out / "teacher" / ("s" + std::to_string(seed_index));
}

}  // namespace

void stage_pretrain_teacher(const LoadedRun& run, int seed_index) {
  const fs::path dir = teacher_dir(run, seed_index);
  fs::create_directories(dir);
  const std::string cfg_hash = run.cfg.hash();
  if (artifact_ready(dir / "base.done.json", cfg_hash)) return;

  const uint64_t seed = run.cfg.seed_for(seed_index);
  PseudoLabeler labeler = fit_pseudo_labeler(
      run.corpus, run.cfg.teacher, Rng(seed).fork("labeler").key());
  save_json(dir / "labeler.json", labeler.to_json());

  TeacherModel model = TeacherModel::create(run.cfg.teacher, seed);
  PseudoLabelCache labels = build_label_cache(model, run.corpus, labeler);
  TeacherTrainLog log = pretrain_teacher(model, run.corpus, labels,
                                         run.cfg.teacher.pretrain_steps, seed);
  model.save(dir / "base.ckpt", "teacher");
  write_jsonl(dir / "pretrain_log.jsonl", cfg_hash, log.rows);
  mark_done(dir / "base.done.json", cfg_hash);
}

void stage_adapt_teacher(const LoadedRun& run, int seed_index) {
  const fs::path dir = teacher_dir(run, seed_index);
  const std::string cfg_hash = run.cfg.hash();
  if (!fs::exists(dir / "base.ckpt"))
    throw DependencyError(
        "missing stage pretrain-teacher: no base checkpoint at " +
        (dir / "base.ckpt").string());
  if (artifact_ready(dir / "adapted.done.json", cfg_hash)) return;

  const uint64_t seed = run.cfg.seed_for(seed_index);
  TeacherModel model =
      TeacherModel::from_checkpoint(nn::load_checkpoint(dir / "base.ckpt"));
  PseudoLabeler labeler =
      PseudoLabeler::from_json(load_json(dir / "labeler.json"));
  PseudoLabelCache labels = build_label_cache(model, run.corpus, labeler);
  TeacherTrainLog log =
      adapt_teacher(model, run.corpus, run.banks, run.policy, labels,
                    run.cfg.teacher.adapt_steps, seed);
  model.save(dir / "adapted.ckpt", "teacher");
  write_jsonl(dir / "adapt_log.jsonl", cfg_hash, log.rows);
  mark_done(dir / "adapted.done.json", cfg_hash);
}

TeacherModel load_teacher(const LoadedRun& run, int seed_index, bool adapted) {
  const fs::path path =
      teacher_dir(run, seed_index) / (adapted ? "adapted.ckpt" : "base.ckpt");
  if (!fs::exists(path))
    throw DependencyError(std::string("missing stage ") +
                          (adapted ? "adapt-teacher" : "pretrain-teacher") +
                          ": no checkpoint at " + path.string());
  return TeacherModel::from_checkpoint(nn::load_checkpoint(path));
}

fs::path stage_distill(const LoadedRun& run, const VariantSpec& variant,
                       int seed_index) {
  const fs::path dir =
      run.out / "runs" / model_id_for(variant, seed_index);
  fs::create_directories(dir);
  const std::string cfg_hash = run.cfg.hash();
  if (artifact_ready(dir / "done.json", cfg_hash)) return dir;
  const auto t_start = std::chrono::steady_clock::now();

  TeacherModel teacher = load_teacher(run, seed_index, variant.adapted_teacher);
  const uint64_t seed = run.cfg.seed_for(seed_index);

  DistillConfig dcfg = run.cfg.distill;
  dcfg.setup = variant.setup;
  dcfg.dat = variant.dat;
  dcfg.seed = seed;

  StudentConfig scfg = run.cfg.student;
  scfg.target_layers = dcfg.target_layers;
  StudentModel student = StudentModel::init_from_teacher(
      teacher, scfg, Rng(seed).fork("student").key());

  std::unique_ptr<DistortionClassifier> classifier;
  if (dcfg.dat)
    classifier = std::make_unique<DistortionClassifier>(
        DistortionClassifier::create(scfg.d_model,
                                     Rng(seed).fork("classifier").key()));

  DistillResult result = distill_run(dcfg, teacher, student, classifier.get(),
                                     run.corpus, run.banks, run.policy);

  student.save(dir / "student.ckpt");
  if (classifier) {
    nn::CheckpointHeader header;
    header.kind = "classifier";
    header.config = {{"d_model", scfg.d_model}};
    header.config_hash = json_hash(header.config);
    header.seed = Rng(seed).fork("classifier").key();
    nn::save_checkpoint(dir / "classifier.ckpt", header, classifier->params());
  }
  // Echo the effective config verbatim into the run directory.
  nlohmann::json echo = run.cfg.to_json();
  echo["distill"] = dcfg.to_json();
  echo["variant"] = {{"id", variant_id(variant)},
                     {"alias", variant_alias(variant)},
                     {"setup", cdm_setup_name(variant.setup)},
                     {"dat", variant.dat},
                     {"adapted_teacher", variant.adapted_teacher}};
  echo["config_hash"] = cfg_hash;
  save_json(dir / "config.json", echo);
  write_jsonl(dir / "trainlog.jsonl", cfg_hash, result.log);
  write_jsonl(dir / "devlog.jsonl", cfg_hash, result.dev_log);
  const double wall_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
          .count();
  save_json(dir / "result.json",
            {{"version", kVersionString},
             {"config_hash", cfg_hash},
             {"wall_seconds", wall_s},
             {"best_step", result.best_step},
             {"best_dev_loss", result.best_dev_loss},
             {"initial_train_loss", result.initial_train_loss},
             {"final_train_loss", result.final_train_loss},
             {"aborted_nan", result.aborted_nan},
             {"param_hash", nn::checkpoint_param_hash(student.params())}});
  mark_done(dir / "done.json", cfg_hash);
  return dir;
}

StudentModel load_student(const LoadedRun& run, const VariantSpec& variant,
                          int seed_index) {
  const fs::path path = run.out / "runs" / model_id_for(variant, seed_index) /
                        "student.ckpt";
  if (!fs::exists(path))
    throw DependencyError("missing stage distill: no checkpoint at " +
                          path.string());
  return StudentModel::from_checkpoint(nn::load_checkpoint(path));
}

ConditionCache ensure_condition_cache(const LoadedRun& run) {
  const fs::path dir = run.out / "eval_cache";
  const uint64_t eval_seed = run.cfg.eval_seed();
  if (fs::exists(dir / "cache.json"))
    return open_condition_cache(dir, run.corpus_hash, eval_seed);
  fs::create_directories(dir);
  ConditionCache cache = build_condition_cache(
      dir, run.corpus, run.banks, run.policy, run.corpus_hash, eval_seed);

  // The distortion-probe dataset shares the cache so every model sees the
  // same audit audio.
  auto test = run.corpus.split_view(Split::kTest);
  std::sort(test.begin(), test.end(),
            [](const Utterance* a, const Utterance* b) { return a->id < b->id; });
  std::vector<Waveform> waves;
  std::vector<DistortionLabel> labels;
  build_distortion_probe_set(test, run.banks, run.policy, eval_seed,
                             run.cfg.eval.variants_per_utt, &waves, &labels);
  fs::create_directories(dir / "probe_set");
  nlohmann::json label_rows = nlohmann::json::array();
  for (size_t i = 0; i < waves.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "%05zu.wav", i);
    wav_write(dir / "probe_set" / name, waves[i]);
    label_rows.push_back(labels[i].to_json());
  }
  save_json(dir / "probe_set.json",
            {{"version", kVersionString},
             {"corpus_hash", run.corpus_hash},
             {"eval_seed", eval_seed},
             {"labels", label_rows}});
  return cache;
}

namespace {

std::pair<std::vector<Waveform>, std::vector<DistortionLabel>>
load_probe_set(const LoadedRun& run) {
  const fs::path dir = run.out / "eval_cache";
  nlohmann::json meta = load_json(dir / "probe_set.json");
  if (meta.at("corpus_hash") != run.corpus_hash)
    throw PolicyError("condition cache mismatch in distortion-probe set");
  std::vector<DistortionLabel> labels;
  for (const auto& row : meta.at("labels")) {
    DistortionLabel l;
    for (int c = 0; c < kNumDistortionClasses; ++c)
      l.bits[c] = static_cast<uint8_t>(row.at(c).get<int>());
    labels.push_back(l);
  }
  std::vector<Waveform> waves;
  waves.reserve(labels.size());
  for (size_t i = 0; i < labels.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "%05zu.wav", i);
    waves.push_back(wav_read(dir / "probe_set" / name));
  }
  return {std::move(waves), std::move(labels)};
}

fs::path eval_dir(const LoadedRun& run, const std::string& model_id) {
  return run.out / "evals" / model_id;
}

}  // namespace

void stage_probe(const LoadedRun& run, const std::string& model_id,
                 const ReprFn& fn, int seed_index) {
  const fs::path dir = eval_dir(run, model_id);
  fs::create_directories(dir);
  const std::string cfg_hash = run.cfg.hash();
  if (artifact_ready(dir / "probe.done.json", cfg_hash)) return;

  std::vector<std::vector<double>> reps;
  std::vector<int> labels;
  for (const auto& u : run.corpus.utterances) {
    if (u.split != Split::kTrain) continue;
    reps.push_back(fn(u.wave));
    labels.push_back(u.class_label);
  }
  ProbeConfig pcfg = run.cfg.probe;
  pcfg.seed = Rng(run.cfg.eval_seed()).fork("probe").key();
  ProbeModel probe =
      train_probe(reps, labels, run.corpus.config.n_classes, pcfg);
  probe.save(dir / "probe.ckpt", "probe");
  mark_done(dir / "probe.done.json", cfg_hash);
  (void)seed_index;
}

EvalReport stage_eval(const LoadedRun& run, const std::string& model_id,
                      const ReprFn& fn, int seed_index) {
  const fs::path dir = eval_dir(run, model_id);
  const std::string cfg_hash = run.cfg.hash();
  if (artifact_ready(dir / "eval.done.json", cfg_hash))
    return EvalReport::from_json(load_json(dir / "report.json"));
  if (!fs::exists(dir / "probe.ckpt"))
    throw DependencyError("missing stage probe: no probe checkpoint at " +
                          (dir / "probe.ckpt").string());

  ConditionCache cache = ensure_condition_cache(run);
  ProbeModel probe =
      ProbeModel::from_checkpoint(nn::load_checkpoint(dir / "probe.ckpt"));

  // Test labels in cache (ascending-id) order.
  std::map<std::string, int> label_of;
  for (const auto& u : run.corpus.utterances)
    if (u.split == Split::kTest) label_of[u.id] = u.class_label;
  std::vector<int> test_labels;
  for (const auto& id : cache.utt_ids) test_labels.push_back(label_of.at(id));

  // One extraction pass per cached condition.
  std::map<std::string, std::vector<std::vector<double>>> reps;
  for (EvalCondition cond : kVizConditions) {
    auto waves = cache.load_condition(cond);
    std::vector<std::vector<double>> r;
    r.reserve(waves.size());
    for (const auto& w : waves) r.push_back(fn(w));
    reps[eval_condition_name(cond)] = std::move(r);
  }
  {
    auto waves = cache.load_condition(EvalCondition::kTwoDist);
    std::vector<std::vector<double>> r;
    r.reserve(waves.size());
    for (const auto& w : waves) r.push_back(fn(w));
    reps["2dist"] = std::move(r);
  }

  EvalReport report;
  report.model_id = model_id;
  report.seed_index = seed_index;
  report.config_hash = cfg_hash;
  for (EvalCondition cond : kProbeConditions) {
    const std::string name = eval_condition_name(cond);
    report.condition_acc[name] =
        probe_accuracy(probe, reps.at(name), test_labels);
  }

  // Invariance over the six visualization conditions.
  {
    const size_t n_utt = cache.utt_ids.size();
    double total = 0.0;
    std::vector<const std::vector<std::vector<double>>*> by_cond;
    for (EvalCondition cond : kVizConditions)
      by_cond.push_back(&reps.at(eval_condition_name(cond)));
    for (size_t u = 0; u < n_utt; ++u) {
      double acc = 0.0;
      int pairs = 0;
      for (size_t i = 0; i < by_cond.size(); ++i)
        for (size_t j = i + 1; j < by_cond.size(); ++j) {
          acc += cosine((*by_cond[i])[u], (*by_cond[j])[u]);
          ++pairs;
        }
      total += acc / pairs;
    }
    report.invariance = total / static_cast<double>(n_utt);
  }

  {
    auto [waves, labels] = load_probe_set(run);
    ProbeConfig pcfg = run.cfg.probe;
    pcfg.seed = Rng(run.cfg.eval_seed()).fork("distortion_probe").key();
    auto dp = distortion_probe(fn, waves, labels, pcfg);
    report.distortion_probe_exact = dp.exact_match;
    report.distortion_probe_per_class_mean = dp.per_class_mean;
  }

  save_json(dir / "report.json", report.to_json());
  mark_done(dir / "eval.done.json", cfg_hash);
  return report;
}

VizResult stage_visualize(const LoadedRun& run, const std::string& model_id,
                          const ReprFn& fn) {
  const fs::path dir = run.out / "viz" / model_id;
  fs::create_directories(dir);
  ConditionCache cache = ensure_condition_cache(run);

  std::map<std::string, std::vector<Waveform>> waves;
  for (EvalCondition cond : kVizConditions)
    waves[eval_condition_name(cond)] = cache.load_condition(cond);

  EmbeddingMatrix m = split_average_embeddings(fn, cache.utt_ids, waves,
                                               run.cfg.eval.n_splits);
  write_embedding_csv(dir / "embeddings.csv", m);

  TsneStats stats;
  auto points = tsne(m.rows, run.cfg.eval.tsne_perplexity,
                     run.cfg.eval.tsne_iters, run.cfg.eval_seed(), &stats);
  write_tsne_csv(dir / "tsne.csv", m, points);

  std::map<std::string, int> cond_index;
  for (size_t i = 0; i < std::size(kVizConditions); ++i)
    cond_index[eval_condition_name(kVizConditions[i])] = static_cast<int>(i);
  std::vector<int> labels;
  labels.reserve(m.rows.size());
  for (const auto& c : m.condition) labels.push_back(cond_index.at(c));

  VizResult result;
  result.silhouette_highd = silhouette_highd(m.rows, labels);
  result.tsne_max_perp_err = stats.max_perplexity_error;
  result.tsne_initial_kl = stats.initial_kl;
  result.tsne_final_kl = stats.final_kl;
  result.n_rows = static_cast<int>(m.rows.size());
  save_json(dir / "viz.json",
            {{"version", kVersionString},
             {"config_hash", run.cfg.hash()},
             {"model_id", model_id},
             {"rows", result.n_rows},
             {"silhouette_highd", result.silhouette_highd},
             {"tsne_max_perplexity_error", result.tsne_max_perp_err},
             {"tsne_initial_kl", result.tsne_initial_kl},
             {"tsne_final_kl", result.tsne_final_kl}});
  return result;
}

namespace {

std::string fmt6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return std::string(buf);
}

}  // namespace

MatrixResult run_matrix(const RunConfig& cfg, const fs::path& out,
                        const std::vector<VariantSpec>& variants, int n_seeds,
                        int jobs) {
  stage_gen_corpus(cfg, out);
  LoadedRun run = open_run(cfg, out);

  bool need_adapted = false;
  for (const auto& v : variants) need_adapted |= v.adapted_teacher;

  // Teachers are shared across the cells of a seed.
  {
    std::vector<std::function<void()>> tasks;
    for (int s = 0; s < n_seeds; ++s)
      tasks.push_back([&run, s, need_adapted] {
        stage_pretrain_teacher(run, s);
        if (need_adapted) stage_adapt_teacher(run, s);
      });
    run_parallel(std::move(tasks), jobs);
  }
  ensure_condition_cache(run);

  MatrixResult result;
  result.cells.resize(variants.size() * static_cast<size_t>(n_seeds));
  {
    std::vector<std::function<void()>> tasks;
    for (size_t vi = 0; vi < variants.size(); ++vi) {
      for (int s = 0; s < n_seeds; ++s) {
        const size_t slot = vi * n_seeds + s;
        tasks.push_back([&run, &result, &variants, vi, s, slot] {
          const VariantSpec& variant = variants[vi];
          stage_distill(run, variant, s);
          StudentModel student = load_student(run, variant, s);
          ReprFn fn = make_student_extractor(student);
          const std::string id = model_id_for(variant, s);
          stage_probe(run, id, fn, s);
          MatrixCell cell;
          cell.variant = variant;
          cell.seed_index = s;
          cell.report = stage_eval(run, id, fn, s);
          result.cells[slot] = std::move(cell);
        });
      }
    }
    run_parallel(std::move(tasks), jobs);
  }

  // Seed-averaged summary table.
  fs::create_directories(out / "matrix");
  const fs::path csv_path = out / "matrix" / "summary.csv";
  const fs::path txt_path = out / "matrix" / "summary.txt";
  std::ofstream csv(csv_path);
  std::ofstream txt(txt_path);
  if (!csv || !txt) throw IoError("cannot write matrix summary");
  csv << "# " << kVersionString << " config_hash=" << cfg.hash() << "\n";
  csv << "variant,alias,teacher,setup,dat,clean,2dist,fsd_like,dns_like,"
         "invariance,distortion_probe\n";
  char line[256];
  std::snprintf(line, sizeof(line), "%-18s %-5s %-8s %7s %7s %7s %7s %9s %7s\n",
                "variant", "alias", "teacher", "clean", "2dist", "fsd", "dns",
                "invar", "dprobe");
  txt << "# " << kVersionString << " config_hash=" << cfg.hash() << "\n"
      << line;
  for (size_t vi = 0; vi < variants.size(); ++vi) {
    const VariantSpec& v = variants[vi];
    double clean = 0, dist2 = 0, fsd = 0, dns = 0, inv = 0, dprobe = 0;
    for (int s = 0; s < n_seeds; ++s) {
      const auto& r = result.cells[vi * n_seeds + s].report;
      clean += r.condition_acc.at("clean");
      dist2 += r.condition_acc.at("2dist");
      fsd += r.condition_acc.at("fsd_like");
      dns += r.condition_acc.at("dns_like");
      inv += r.invariance;
      dprobe += r.distortion_probe_exact;
    }
    const double k = static_cast<double>(n_seeds);
    clean /= k;
    dist2 /= k;
    fsd /= k;
    dns /= k;
    inv /= k;
    dprobe /= k;
    csv << variant_id(v) << "," << variant_alias(v) << ","
        << (v.adapted_teacher ? "adapted" : "base") << ","
        << cdm_setup_name(v.setup) << "," << (v.dat ? 1 : 0) << ","
        << fmt6(clean) << "," << fmt6(dist2) << "," << fmt6(fsd) << ","
        << fmt6(dns) << "," << fmt6(inv) << "," << fmt6(dprobe) << "\n";
    std::snprintf(line, sizeof(line),
                  "%-18s %-5s %-8s %7.4f %7.4f %7.4f %7.4f %9.4f %7.4f\n",
                  variant_id(v).c_str(), variant_alias(v).c_str(),
                  v.adapted_teacher ? "adapted" : "base", clean, dist2, fsd,
                  dns, inv, dprobe);
    txt << line;
  }
  result.summary_csv = csv_path;
  result.summary_txt = txt_path;
  return result;
}

}  // namespace rkd
