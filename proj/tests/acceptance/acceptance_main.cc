// tests/acceptance/acceptance_main.cc
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
//
// End-to-end acceptance suite: eleven checks covering the numerical core,
// DSP exactness, loss pins, convergence, the directional robustness
// findings (three-seed means), the visualization pipeline, and bitwise
// reproducibility of the experiment matrix.  Prints one PASS/FAIL line per
// check; the exit code is the number of failures.

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "rkd/audio/dsp.h"
#include "rkd/cli/driver.h"
#include "rkd/common/fft.h"
#include "rkd/common/jsonio.h"
#include "rkd/eval/tsne.h"
#include "../testutil.h"

namespace fs = std::filesystem;
using namespace rkd;
using nn::Tensor;

namespace {

int g_failures = 0;

void report(const char* id, bool ok, const std::string& detail) {
  std::printf("[%s] %-4s %s\n", ok ? "PASS" : "FAIL", id, detail.c_str());
  std::fflush(stdout);
  if (!ok) ++g_failures;
}

double now_s() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list args;
  va_start(args, f);
  std::vsnprintf(buf, sizeof(buf), f, args);
  va_end(args);
  return std::string(buf);
}

// The workbench configuration for the directional experiments: the default
// corpus and model sizes with desk-scale step counts.
RunConfig acceptance_config() {
  RunConfig cfg;
  cfg.master_seed = 1234;
  cfg.teacher.pretrain_steps = 800;
  cfg.teacher.adapt_steps = 400;
  cfg.distill.steps = 600;
  cfg.distill.eval_every = 100;
  cfg.matrix_seeds = 2;
  return cfg;
}

Waveform sine(double freq, double seconds, int fs, double amp = 1.0) {
  Waveform w;
  w.sample_rate = fs;
  w.samples.resize(static_cast<size_t>(seconds * fs));
  for (size_t i = 0; i < w.size(); ++i)
    w.samples[i] = amp * std::sin(2.0 * std::numbers::pi * freq * i / fs);
  return w;
}

// ---------------------------------------------------------------------------
// C1: gradients of every layer and loss vs central finite differences.

void criterion_1() {
  const double t0 = now_s();
  double worst = 0.0;
  std::string worst_name = "none";
  auto track = [&](const char* name, const testutil::GradcheckReport& r) {
    if (r.max_rel_err > worst) {
      worst = r.max_rel_err;
      worst_name = name;
    }
  };
  Rng rng(2024);
  auto rand_leaf = [&](std::vector<int> shape, double scl = 1.0) {
    int64_t n = 1;
    for (int d : shape) n *= d;
    std::vector<double> v(n);
    for (auto& x : v) x = scl * rng.normal();
    return Tensor::leaf(std::move(shape), std::move(v), true);
  };

  {
    Tensor a = rand_leaf({4, 3}), b = rand_leaf({3, 5}), bias = rand_leaf({5});
    track("matmul+bias+gelu", testutil::gradcheck([&] {
      return nn::sum_all(nn::gelu(nn::add(nn::matmul(a, b), bias)));
    }, {a, b, bias}));
  }
  {
    Tensor x = rand_leaf({2, 13}), w = rand_leaf({3, 2, 4}, 0.5);
    Tensor b = rand_leaf({3});
    track("conv1d", testutil::gradcheck([&] {
      return nn::sum_all(nn::gelu(nn::conv1d(x, w, b, 3)));
    }, {x, w, b}));
  }
  {
    Tensor x = rand_leaf({4, 6}), g = rand_leaf({6}), be = rand_leaf({6});
    Tensor probe = rand_leaf({4, 6});
    probe.node()->requires_grad = false;
    track("layer_norm", testutil::gradcheck([&] {
      return nn::sum_all(nn::mul(nn::layer_norm(x, g, be), probe));
    }, {x, g, be}));
  }
  {
    Tensor x = rand_leaf({3, 8});
    track("softmax+slice+concat", testutil::gradcheck([&] {
      Tensor y = nn::softmax_rows(
          nn::concat_cols({nn::slice_cols(x, 4, 4), nn::slice_cols(x, 0, 4)}));
      return nn::mean_all(nn::mean_axis(y, 0));
    }, {x}));
  }
  {
    Tensor x = rand_leaf({5, 3});
    track("sigmoid/log_sigmoid/relu", testutil::gradcheck([&] {
      return nn::mean_all(
          nn::add(nn::relu(x), nn::add(nn::sigmoid(x), nn::log_sigmoid(x))));
    }, {x}));
  }
  {
    nn::ParamStore store;
    Rng brng(7);
    auto block = nn::TransformerBlock::create(store, "b", 6, 2, 8, 0.0, brng);
    Tensor x = rand_leaf({5, 6});
    x.node()->requires_grad = false;
    track("transformer_block", testutil::gradcheck([&] {
      return nn::mean_all(block.forward(x, nn::Mode::kEval, nullptr));
    }, store.tensors()));
  }
  {
    nn::ParamStore store;
    Rng frng(8);
    auto fe = nn::ConvFrontEnd::create(store, "fe", 8, frng);
    std::vector<double> wave(200);
    for (auto& v : wave) v = 0.3 * rng.normal();
    track("conv_front_end", testutil::gradcheck([&] {
      return nn::mean_all(fe.forward(wave));
    }, store.tensors()));
  }
  {
    // Distillation loss (L1 + cosine terms) over two target layers.
    Tensor t1 = rand_leaf({3, 8}), t2 = rand_leaf({3, 8});
    t1.node()->requires_grad = false;
    t2.node()->requires_grad = false;
    Tensor s1 = rand_leaf({3, 8}), s2 = rand_leaf({3, 8});
    track("distil_loss", testutil::gradcheck([&] {
      return distil_loss({t1, t2}, {s1, s2}, 1.3).total;
    }, {s1, s2}));
  }
  {
    Tensor logits = rand_leaf({3, 7});
    std::vector<double> targets(21);
    Rng trng(5);
    for (auto& t : targets) t = trng.uniform() < 0.3 ? 1.0 : 0.0;
    track("multilabel_bce", testutil::gradcheck([&] {
      return nn::bce_multilabel(logits, targets);
    }, {logits}));
  }
  {
    Tensor logits = rand_leaf({6, 5});
    std::vector<int> labels = {0, 3, 2, 4, 1, 2};
    std::vector<double> weights = {1, 0, 1, 1, 0, 1};
    track("masked_ce", testutil::gradcheck([&] {
      return nn::ce_logits(logits, labels, weights);
    }, {logits}));
  }

  const double secs = now_s() - t0;
  report("C1", worst < 1e-4 && secs < 10.0,
         fmt("gradcheck: max rel err %.3e (worst %s), %.1f s (< 10 s)", worst,
             worst_name.c_str(), secs));
}

// ---------------------------------------------------------------------------
// C2: DSP exactness.

void criterion_2() {
  const double t0 = now_s();
  bool ok = true;
  std::string detail;

  {
    Rng rng(31);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
      const size_t ns = 200 + rng.uniform_int(1000);
      Waveform s = gaussian_noise(ns, rng.uniform(0.05, 1.0), rng, 8000);
      Waveform n = gaussian_noise(100 + rng.uniform_int(2000),
                                  rng.uniform(0.05, 1.0), rng, 8000);
      const double target = rng.uniform(0.0, 30.0);
      Waveform out = mix_at_snr(s, n, target, rng);
      double ps = 0.0, pn = 0.0;
      for (size_t k = 0; k < s.size(); ++k) {
        ps += s.samples[k] * s.samples[k];
        const double d = out.samples[k] - s.samples[k];
        pn += d * d;
      }
      worst = std::max(worst,
                       std::fabs(10.0 * std::log10(ps / pn) - target));
    }
    ok &= worst <= 0.01;
    detail += fmt("snr err %.4f dB; ", worst);
  }

  {
    Rng rng(32);
    double worst = 0.0;
    bool support_ok = true;
    for (int trial = 0; trial < 6; ++trial) {
      RoomSpec room;
      room.dims = {rng.uniform(3.0, 8.0), rng.uniform(3.0, 8.0),
                   rng.uniform(2.5, 5.0)};
      for (int i = 0; i < 3; ++i) {
        room.src[i] = rng.uniform(0.5, room.dims[i] - 0.5);
        room.mic[i] = rng.uniform(0.5, room.dims[i] - 0.5);
      }
      room.absorption = rng.uniform(0.2, 0.9);
      room.max_order = trial % 3;
      Rir rir = image_method_rir(room, 8000);

      // Independent enumeration of every mirrored box and corner parity.
      const double refl = std::sqrt(1.0 - room.absorption);
      std::map<long, double> taps;
      const int lim = room.max_order + 1;
      for (int nx = -lim; nx <= lim; ++nx)
        for (int px = 0; px <= 1; ++px)
          for (int ny = -lim; ny <= lim; ++ny)
            for (int py = 0; py <= 1; ++py)
              for (int nz = -lim; nz <= lim; ++nz)
                for (int pz = 0; pz <= 1; ++pz) {
                  const int b = std::abs(2 * nx - px) + std::abs(2 * ny - py) +
                                std::abs(2 * nz - pz);
                  if (b > room.max_order) continue;
                  const double img[3] = {
                      (1 - 2 * px) * room.src[0] + 2.0 * nx * room.dims[0],
                      (1 - 2 * py) * room.src[1] + 2.0 * ny * room.dims[1],
                      (1 - 2 * pz) * room.src[2] + 2.0 * nz * room.dims[2]};
                  double d2 = 0.0;
                  for (int i = 0; i < 3; ++i) {
                    const double d = img[i] - room.mic[i];
                    d2 += d * d;
                  }
                  const double dist = std::sqrt(d2);
                  taps[std::lround(dist / kSpeedOfSound * 8000.0)] +=
                      std::pow(refl, b) / (4.0 * std::numbers::pi * dist);
                }
      long max_tap = 0;
      for (auto& [t, v] : taps) max_tap = std::max(max_tap, t);
      std::vector<double> oracle(max_tap + 1, 0.0);
      for (auto& [t, v] : taps) oracle[t] = v;
      double total = 0.0;
      for (double v : oracle) total += v * v;
      size_t end = oracle.size();
      double tail = 0.0;
      while (end > 1) {
        const double v = oracle[end - 1];
        if (tail + v * v > 1e-6 * total) break;
        tail += v * v;
        --end;
      }
      oracle.resize(end);
      if (rir.taps.size() != oracle.size()) {
        support_ok = false;
        continue;
      }
      for (size_t i = 0; i < oracle.size(); ++i)
        worst = std::max(worst, std::fabs(rir.taps[i] - oracle[i]) /
                                    std::max(1.0, std::fabs(oracle[i])));
    }
    ok &= support_ok && worst <= 1e-12;
    detail += fmt("rir oracle err %.1e; ", worst);
  }

  {
    const int fs = 8000;
    const double f0 = 1000.0;
    auto tail_rms = [](const Waveform& w) {
      std::vector<double> tail(w.samples.begin() + w.size() / 2,
                               w.samples.end());
      return rms(tail);
    };
    Waveform center = sine(f0, 1.0, fs), below = sine(f0 / 4.0, 1.0, fs);
    const double att_c = 20.0 * std::log10(tail_rms(center) /
                                           tail_rms(band_reject(center, f0, f0)));
    const double att_b = 20.0 * std::log10(tail_rms(below) /
                                           tail_rms(band_reject(below, f0, f0)));
    ok &= att_c >= 20.0 && att_b <= 1.0;
    detail += fmt("notch %.1f dB@fc %.2f dB@fc/4; ", att_c, att_b);
  }

  {
    Waveform tone = sine(440.0, 1.0, 8000, 0.7);
    Waveform up = pitch_shift(tone, 1200.0);
    const double peak = dominant_frequency_hz(up.samples, 8000, 8192);
    ok &= std::fabs(peak - 880.0) / 880.0 <= 0.03 && up.size() == tone.size();
    detail += fmt("pitch peak %.1f Hz; ", peak);
  }

  const double secs = now_s() - t0;
  ok &= secs < 30.0;
  report("C2", ok, detail + fmt("%.1f s (< 30 s)", secs));
}

// ---------------------------------------------------------------------------
// C3: loss formula pins.

void criterion_3() {
  bool ok = true;
  Rng rng(41);
  std::vector<double> v(5 * 8);
  for (auto& x : v) x = rng.normal();
  Tensor h = Tensor::leaf({5, 8}, v);
  auto parts = distil_loss({h}, {h}, 1.0);
  const double expected = -std::log(1.0 / (1.0 + std::exp(-1.0)));
  const double per_cell = parts.total.item() / 5.0;  // one layer, T = 5
  ok &= std::fabs(per_cell - expected) < 1e-9;

  std::vector<double> w(5 * 8);
  for (auto& x : w) x = rng.normal();
  Tensor p = Tensor::leaf({5, 8}, w);
  auto g1 = distil_loss({h}, {p}, 1.0);
  auto g3 = distil_loss({h}, {p}, 3.0);
  ok &= std::fabs(g3.cos.item() - 3.0 * g1.cos.item()) < 1e-12;
  ok &= std::fabs(g3.l1.item() - g1.l1.item()) < 1e-12;
  ok &= std::fabs(g1.total.item() - g1.l1.item() - g1.cos.item()) < 1e-12;

  report("C3", ok,
         fmt("identity loss per cell %.12f vs -ln s(1) %.12f; gamma scaling "
             "exact",
             per_cell, expected));
}

// ---------------------------------------------------------------------------
// Experiment bundle shared by C4-C11.

void run_acceptance_experiments() {
  const RunConfig cfg = acceptance_config();
  const fs::path base = fs::temp_directory_path() / "rkd_acceptance";
  const fs::path dir_a = base / "matrix_a";
  const fs::path dir_b = base / "matrix_b";
  const int jobs = 2;

  // Full 16-variant x 2-seed matrix (criterion 11 timing target).
  const double t_matrix = now_s();
  MatrixResult matrix_a =
      run_matrix(cfg, dir_a, full_variant_grid(), cfg.matrix_seeds, jobs);
  const double matrix_secs = now_s() - t_matrix;
  const std::string summary_a = read_text_file(matrix_a.summary_csv);
  std::printf("  (matrix A finished in %.0f s)\n", matrix_secs);
  std::fflush(stdout);

  // Third seed for the variants used by the three-seed criteria.
  const std::vector<VariantSpec> directional = {
      {CdmSetup::kNone, false, false},    {CdmSetup::kSetup1, false, false},
      {CdmSetup::kSetup2, false, false},  {CdmSetup::kSetup2Same, false, false},
      {CdmSetup::kSetup1, true, false},   {CdmSetup::kNone, false, true},
  };
  run_matrix(cfg, dir_a, directional, 3, jobs);

  LoadedRun run = open_run(cfg, dir_a);

  // Teacher evaluations (probe accuracies for C5) over three seeds.
  std::vector<EvalReport> teacher_reports;
  for (int s = 0; s < 3; ++s) {
    TeacherModel teacher = load_teacher(run, s, false);
    ReprFn fn = make_teacher_extractor(teacher);
    const std::string id = teacher_model_id(false, s);
    stage_probe(run, id, fn, s);
    teacher_reports.push_back(stage_eval(run, id, fn, s));
  }

  auto reports3 = [&](const VariantSpec& v) {
    std::vector<EvalReport> out;
    for (int s = 0; s < 3; ++s) {
      StudentModel student = load_student(run, v, s);
      ReprFn fn = make_student_extractor(student);
      out.push_back(stage_eval(run, model_id_for(v, s), fn, s));
    }
    return out;
  };

  const auto r_none = reports3({CdmSetup::kNone, false, false});
  const auto r_s1 = reports3({CdmSetup::kSetup1, false, false});
  const auto r_s2 = reports3({CdmSetup::kSetup2, false, false});
  const auto r_same = reports3({CdmSetup::kSetup2Same, false, false});
  const auto r_s1dat = reports3({CdmSetup::kSetup1, true, false});
  const auto r_none_ta = reports3({CdmSetup::kNone, false, true});

  auto mean_over = [](const std::vector<EvalReport>& rs, auto getter) {
    double acc = 0.0;
    for (const auto& r : rs) acc += getter(r);
    return acc / static_cast<double>(rs.size());
  };

  // --- C4: convergence of the baseline run (reuses the matrix cell).
  {
    const fs::path run_dir = dir_a / "runs" / "none_s0";
    nlohmann::json result = load_json(run_dir / "result.json");
    std::ifstream log(run_dir / "trainlog.jsonl");
    std::string line;
    std::getline(log, line);  // meta row
    std::vector<double> losses;
    while (std::getline(log, line)) {
      if (line.empty()) continue;
      losses.push_back(nlohmann::json::parse(line).at("l_distil"));
    }
    double head = 0.0, tail = 0.0;
    const size_t k = std::min<size_t>(20, losses.size() / 2);
    for (size_t i = 0; i < k; ++i) {
      head += losses[i] / k;
      tail += losses[losses.size() - 1 - i] / k;
    }
    const double wall = result.at("wall_seconds");
    const bool ok = losses.size() <= 2000 && tail <= 0.5 * head && wall < 600.0;
    report("C4", ok,
           fmt("baseline distillation: train loss %.3f -> %.3f (%.0f%% of "
               "initial) in %zu steps, %.0f s (< 600 s)",
               head, tail, 100.0 * tail / head, losses.size(), wall));
  }

  // --- C5: degradation replication.
  {
    auto clean = [](const EvalReport& r) { return r.condition_acc.at("clean"); };
    auto dns = [](const EvalReport& r) { return r.condition_acc.at("dns_like"); };
    const double s_clean = mean_over(r_none, clean);
    const double s_dns = mean_over(r_none, dns);
    const double t_clean = mean_over(teacher_reports, clean);
    const double t_dns = mean_over(teacher_reports, dns);
    const double student_gap = s_clean - s_dns;
    const double teacher_gap = t_clean - t_dns;
    const bool ok = student_gap >= 0.05 && student_gap >= teacher_gap;
    report("C5", ok,
           fmt("baseline student clean %.3f vs dns %.3f (gap %.3f >= 0.05); "
               "teacher gap %.3f (student >= teacher)",
               s_clean, s_dns, student_gap, teacher_gap));
  }

  // --- C6: CDM effectiveness.
  {
    auto dist = [](const EvalReport& r) { return r.mean_distorted_acc(); };
    const double m_none = mean_over(r_none, dist);
    const double m_s1 = mean_over(r_s1, dist);
    const double m_s2 = mean_over(r_s2, dist);
    const bool ok = m_s1 > m_none && m_s2 > m_none && m_s2 >= m_s1;
    report("C6", ok,
           fmt("mean distorted acc: baseline %.3f, setup1 %.3f, setup2 %.3f "
               "(setup1 > base, setup2 > base, setup2 >= setup1)",
               m_none, m_s1, m_s2));
  }

  // --- C7: same-distortion leakage.
  {
    auto dp = [](const EvalReport& r) { return r.distortion_probe_exact; };
    const double m_same = mean_over(r_same, dp);
    const double m_s2 = mean_over(r_s2, dp);
    report("C7", m_same > m_s2,
           fmt("distortion-probe exact-match: setup2_same %.3f > setup2 %.3f",
               m_same, m_s2));
  }

  // --- C8: DAT with the unadapted teacher.
  {
    auto dist = [](const EvalReport& r) { return r.mean_distorted_acc(); };
    auto dp = [](const EvalReport& r) { return r.distortion_probe_exact; };
    const double m_dat = mean_over(r_s1dat, dist);
    const double m_plain = mean_over(r_s1, dist);
    int wins = 0;
    for (int s = 0; s < 3; ++s)
      if (dist(r_s1dat[s]) > dist(r_s1[s])) ++wins;
    const double dp_dat = mean_over(r_s1dat, dp);
    const double dp_plain = mean_over(r_s1, dp);
    const bool ok = m_dat >= m_plain && wins >= 2 && dp_dat < dp_plain;
    report("C8", ok,
           fmt("setup1+DAT vs setup1: mean distorted %.3f vs %.3f, per-seed "
               "wins %d/3 (need >=2); distortion-probe %.3f < %.3f",
               m_dat, m_plain, wins, dp_dat, dp_plain));
  }

  // --- C9: robust-teacher ordering (invariance of the student).
  {
    auto inv = [](const EvalReport& r) { return r.invariance; };
    const double i_ta = mean_over(r_none_ta, inv);
    const double i_base = mean_over(r_none, inv);
    report("C9", i_ta > i_base,
           fmt("student invariance: adapted teacher %.4f > baseline teacher "
               "%.4f",
               i_ta, i_base));
  }

  // --- C10: visualization pipeline on base vs adapted teachers.
  {
    bool ok = true;
    double worst_perr = 0.0, worst_secs = 0.0;
    double sil_base = 0.0, sil_adapted = 0.0;
    int rows = 0;
    for (int s = 0; s < 3; ++s) {
      for (bool adapted : {false, true}) {
        TeacherModel teacher = load_teacher(run, s, adapted);
        const double v0 = now_s();
        VizResult viz = stage_visualize(run, teacher_model_id(adapted, s),
                                        make_teacher_extractor(teacher));
        worst_secs = std::max(worst_secs, now_s() - v0);
        worst_perr = std::max(worst_perr, viz.tsne_max_perp_err);
        rows = viz.n_rows;
        ok &= viz.n_rows == 600;
        ok &= viz.tsne_final_kl < viz.tsne_initial_kl;
        (adapted ? sil_adapted : sil_base) += viz.silhouette_highd / 3.0;
      }
    }
    ok &= worst_perr <= 1e-4;
    ok &= sil_base > sil_adapted;
    ok &= worst_secs < 120.0;
    report("C10", ok,
           fmt("rows %d (= 600); perplexity err %.2e (<= 1e-4); silhouette "
               "base %.3f > adapted %.3f; slowest viz %.0f s (< 120 s)",
               rows, worst_perr, sil_base, sil_adapted, worst_secs));
  }

  // --- C11: bit-identical matrix reproduction within the time budget.
  {
    MatrixResult matrix_b =
        run_matrix(cfg, dir_b, full_variant_grid(), cfg.matrix_seeds, jobs);
    const std::string summary_b = read_text_file(matrix_b.summary_csv);
    const bool identical = summary_a == summary_b;
    const bool ok = identical && matrix_secs < 5400.0;
    report("C11", ok,
           fmt("summary CSVs %s; matrix wall %.0f s (< 5400 s)",
               identical ? "bit-identical" : "DIFFER", matrix_secs));
  }
}

}  // namespace

int main() {
  std::printf("acceptance suite: %s\n", kVersionString);
  const double t0 = now_s();
  criterion_1();
  criterion_2();
  criterion_3();
  run_acceptance_experiments();
  std::printf("total wall time: %.0f s; failures: %d\n", now_s() - t0,
              g_failures);
  return g_failures;
}
