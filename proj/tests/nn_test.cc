// tests/nn_test.cc
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
#include <filesystem>

#include <doctest.h>

#include "rkd/common/error.h"
#include "rkd/nn/checkpoint.h"
#include "rkd/nn/layers.h"
#include "rkd/nn/ops.h"
#include "testutil.h"

using namespace rkd;
using nn::Tensor;

namespace {

Tensor rand_leaf(std::vector<int> shape, Rng& rng, bool grad = true,
                 double scl = 1.0) {
  int64_t n = 1;
  for (int d : shape) n *= d;
  std::vector<double> v(n);
  for (auto& x : v) x = scl * rng.normal();
  return Tensor::leaf(std::move(shape), std::move(v), grad);
}

}  // namespace

TEST_CASE("primitives: forward examples") {
  // sigmoid(0) = 0.5
  Tensor s = nn::sigmoid(Tensor::leaf({1}, {0.0}));
  CHECK(s.item() == doctest::Approx(0.5));

  // layer_norm of a constant row is zero before the affine part.
  Tensor x = Tensor::leaf({1, 4}, {3.0, 3.0, 3.0, 3.0});
  Tensor gamma = Tensor::leaf({4}, {1.0, 1.0, 1.0, 1.0});
  Tensor beta = Tensor::leaf({4}, {0.0, 0.0, 0.0, 0.0});
  Tensor ln = nn::layer_norm(x, gamma, beta);
  for (double v : ln.val()) CHECK(std::fabs(v) < 1e-5);

  // conv1d([1,2,3,4], kernel [1,1], stride 2, no pad) = [3, 7]
  Tensor cx = Tensor::leaf({1, 4}, {1.0, 2.0, 3.0, 4.0});
  Tensor cw = Tensor::leaf({1, 1, 2}, {1.0, 1.0});
  Tensor cb = Tensor::leaf({1}, {0.0});
  Tensor cy = nn::conv1d(cx, cw, cb, 2);
  REQUIRE(cy.shape() == std::vector<int>{1, 2});
  CHECK(cy.val()[0] == doctest::Approx(3.0));
  CHECK(cy.val()[1] == doctest::Approx(7.0));

  // softmax rows sum to one.
  Rng rng(1);
  Tensor sm = nn::softmax_rows(rand_leaf({5, 7}, rng, false));
  for (int i = 0; i < 5; ++i) {
    double acc = 0.0;
    for (int j = 0; j < 7; ++j) acc += sm.val()[i * 7 + j];
    CHECK(acc == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("cosine similarity: examples and bounds") {
  Tensor a = Tensor::leaf({2}, {1.0, 0.0});
  CHECK(nn::cosine_similarity(a, a).item() == doctest::Approx(1.0));

  Tensor b = Tensor::leaf({2}, {0.0, 1.0});
  CHECK(nn::cosine_similarity(a, b).item() == doctest::Approx(0.0));

  Tensor c = Tensor::leaf({2}, {1.0, 1.0});
  CHECK(nn::cosine_similarity(a, c).item() ==
        doctest::Approx(1.0 / std::sqrt(2.0)));

  Rng rng(2);
  for (int i = 0; i < 100; ++i) {
    Tensor u = rand_leaf({8}, rng, false);
    Tensor v = rand_leaf({8}, rng, false);
    const double cs = nn::cosine_similarity(u, v).item();
    CHECK(cs >= -1.0 - 1e-12);
    CHECK(cs <= 1.0 + 1e-12);
  }
}

TEST_CASE("backward: sum gives ones; sigmoid(w)*v at w=0 gives 0.25*v") {
  Rng rng(3);
  Tensor x = rand_leaf({3, 4}, rng);
  nn::backward(nn::sum_all(x));
  for (double g : x.grad()) CHECK(g == doctest::Approx(1.0));

  const double v = 1.7;
  Tensor w = Tensor::leaf({1}, {0.0}, true);
  Tensor loss = nn::scale(nn::sigmoid(w), v);
  nn::backward(loss);
  CHECK(w.grad()[0] == doctest::Approx(0.25 * v));
}

TEST_CASE("backward: non-scalar root rejected; diamond graphs accumulate") {
  Rng rng(4);
  Tensor x = rand_leaf({2, 2}, rng);
  CHECK_THROWS_AS(nn::backward(x), ShapeError);

  // Diamond: y = sum(x*x + x*x) shares x twice on each path.
  auto f = [&]() {
    Tensor p = nn::mul(x, x);
    return nn::sum_all(nn::add(p, p));
  };
  auto report = testutil::gradcheck(f, {x});
  CHECK(report.max_rel_err < 1e-4);

  // Known value: d/dx sum(2x^2) = 4x.
  std::fill(x.grad().begin(), x.grad().end(), 0.0);
  nn::backward(f());
  for (size_t i = 0; i < x.val().size(); ++i)
    CHECK(x.grad()[i] == doctest::Approx(4.0 * x.val()[i]));
}

TEST_CASE("gradcheck: every primitive on random small shapes") {
  Rng rng(5);

  SUBCASE("matmul + add broadcast + gelu") {
    Tensor a = rand_leaf({4, 3}, rng);
    Tensor b = rand_leaf({3, 5}, rng);
    Tensor bias = rand_leaf({5}, rng);
    auto f = [&] {
      return nn::sum_all(nn::gelu(nn::add(nn::matmul(a, b), bias)));
    };
    CHECK(testutil::gradcheck(f, {a, b, bias}).max_rel_err < 1e-4);
  }
  SUBCASE("matmul_nt + transpose + relu + mul") {
    Tensor a = rand_leaf({4, 3}, rng);
    Tensor b = rand_leaf({6, 3}, rng);
    Tensor m = rand_leaf({6, 4}, rng);
    auto f = [&] {
      Tensor y = nn::transpose2d(nn::matmul_nt(a, b));  // (6,4)
      return nn::sum_all(nn::mul(nn::relu(y), m));
    };
    CHECK(testutil::gradcheck(f, {a, b, m}).max_rel_err < 1e-4);
  }
  SUBCASE("conv1d strided") {
    Tensor x = rand_leaf({2, 13}, rng);
    Tensor w = rand_leaf({3, 2, 4}, rng, true, 0.5);
    Tensor b = rand_leaf({3}, rng);
    auto f = [&] { return nn::sum_all(nn::gelu(nn::conv1d(x, w, b, 3))); };
    CHECK(testutil::gradcheck(f, {x, w, b}).max_rel_err < 1e-4);
  }
  SUBCASE("layer_norm") {
    Tensor x = rand_leaf({4, 6}, rng);
    Tensor gamma = rand_leaf({6}, rng);
    Tensor beta = rand_leaf({6}, rng);
    Tensor probe = rand_leaf({4, 6}, rng, false);
    auto f = [&] {
      return nn::sum_all(nn::mul(nn::layer_norm(x, gamma, beta), probe));
    };
    CHECK(testutil::gradcheck(f, {x, gamma, beta}).max_rel_err < 1e-4);
  }
  SUBCASE("softmax + slice + concat + mean_axis") {
    Tensor x = rand_leaf({3, 8}, rng);
    Tensor probe = rand_leaf({8}, rng, false);
    auto f = [&] {
      Tensor lo = nn::slice_cols(x, 0, 4);
      Tensor hi = nn::slice_cols(x, 4, 4);
      Tensor y = nn::softmax_rows(nn::concat_cols({hi, lo}));
      return nn::sum_all(nn::mul(nn::mean_axis(y, 0), probe));
    };
    CHECK(testutil::gradcheck(f, {x}).max_rel_err < 1e-4);
  }
  SUBCASE("sigmoid / log_sigmoid / mean_axis(1)") {
    Tensor x = rand_leaf({5, 3}, rng);
    auto f = [&] {
      Tensor y = nn::add(nn::sigmoid(x), nn::log_sigmoid(x));
      return nn::mean_all(nn::mean_axis(y, 1));
    };
    CHECK(testutil::gradcheck(f, {x}).max_rel_err < 1e-4);
  }
  SUBCASE("l1_rows and cosine_rows") {
    Tensor a = rand_leaf({4, 6}, rng);
    Tensor b = rand_leaf({4, 6}, rng);
    auto f = [&] {
      Tensor l1 = nn::sum_all(nn::l1_rows(a, b));
      Tensor cs = nn::sum_all(nn::log_sigmoid(nn::cosine_rows(a, b)));
      return nn::add(l1, nn::scale(cs, -1.0));
    };
    CHECK(testutil::gradcheck(f, {a, b}).max_rel_err < 1e-4);
  }
  SUBCASE("replace_rows") {
    Tensor x = rand_leaf({5, 4}, rng);
    Tensor emb = rand_leaf({4}, rng);
    Tensor probe = rand_leaf({5, 4}, rng, false);
    std::vector<uint8_t> mask = {1, 0, 0, 1, 0};
    auto f = [&] {
      return nn::sum_all(nn::mul(nn::replace_rows(x, mask, emb), probe));
    };
    CHECK(testutil::gradcheck(f, {x, emb}).max_rel_err < 1e-4);
  }
  SUBCASE("ce_logits with mask weights") {
    Tensor logits = rand_leaf({6, 5}, rng);
    std::vector<int> labels = {0, 3, 2, 4, 1, 2};
    std::vector<double> weights = {1.0, 0.0, 1.0, 1.0, 0.0, 1.0};
    auto f = [&] { return nn::ce_logits(logits, labels, weights); };
    CHECK(testutil::gradcheck(f, {logits}).max_rel_err < 1e-4);
  }
  SUBCASE("bce_multilabel") {
    Tensor logits = rand_leaf({3, 7}, rng);
    std::vector<double> targets(21, 0.0);
    Rng trng(6);
    for (auto& t : targets) t = trng.uniform() < 0.3 ? 1.0 : 0.0;
    auto f = [&] { return nn::bce_multilabel(logits, targets); };
    CHECK(testutil::gradcheck(f, {logits}).max_rel_err < 1e-4);
  }
}

TEST_CASE("gradcheck: 3-layer MLP matches central finite differences") {
  Rng rng(7);
  nn::ParamStore store;
  auto l1 = nn::Linear::create(store, "l1", 6, 8, rng);
  auto l2 = nn::Linear::create(store, "l2", 8, 8, rng);
  auto l3 = nn::Linear::create(store, "l3", 8, 1, rng);
  Tensor x = rand_leaf({3, 6}, rng, false);
  auto f = [&] {
    Tensor h = nn::gelu(l1.forward(x));
    h = nn::gelu(l2.forward(h));
    return nn::mean_all(l3.forward(h));
  };
  auto report = testutil::gradcheck(f, store.tensors());
  CHECK(report.max_rel_err < 1e-4);
}

TEST_CASE("gradcheck: transformer block and conv front-end (tiny shapes)") {
  Rng rng(8);
  nn::ParamStore store;
  auto block = nn::TransformerBlock::create(store, "b", 6, 2, 8, 0.0, rng);
  Tensor x = rand_leaf({5, 6}, rng, false);
  auto f = [&] {
    return nn::mean_all(block.forward(x, nn::Mode::kEval, nullptr));
  };
  CHECK(testutil::gradcheck(f, store.tensors()).max_rel_err < 1e-4);

  nn::ParamStore fe_store;
  auto fe = nn::ConvFrontEnd::create(fe_store, "fe", 8, rng);
  std::vector<double> wave(200);
  for (auto& v : wave) v = 0.3 * rng.normal();
  auto g = [&] { return nn::mean_all(fe.forward(wave)); };
  CHECK(testutil::gradcheck(g, fe_store.tensors()).max_rel_err < 1e-4);
}

TEST_CASE("losses: closed forms") {
  // multilabel BCE at zero logits is ln 2 for any targets.
  Tensor logits = Tensor::leaf({1, 7}, std::vector<double>(7, 0.0));
  std::vector<double> targets = {1, 0, 1, 0, 0, 1, 0};
  CHECK(nn::bce_multilabel(logits, targets).item() ==
        doctest::Approx(std::log(2.0)).epsilon(1e-12));

  // Saturated logits drive the loss to zero.
  std::vector<double> big(7);
  for (int i = 0; i < 7; ++i) big[i] = targets[i] > 0.5 ? 50.0 : -50.0;
  Tensor sat = Tensor::leaf({1, 7}, big);
  CHECK(nn::bce_multilabel(sat, targets).item() < 1e-9);

  // Non-negativity on random inputs.
  Rng rng(9);
  for (int i = 0; i < 50; ++i) {
    Tensor l = rand_leaf({2, 7}, rng, false, 3.0);
    std::vector<double> t(14);
    for (auto& v : t) v = rng.uniform() < 0.5 ? 1.0 : 0.0;
    CHECK(nn::bce_multilabel(l, t).item() >= 0.0);
  }
  CHECK_THROWS_AS(nn::bce_multilabel(logits, {1, 0, 0.5, 0, 0, 0, 0}),
                  ShapeError);
}

TEST_CASE("shape errors name both shapes") {
  Tensor a = Tensor::leaf({2, 3}, std::vector<double>(6, 0.0));
  Tensor b = Tensor::leaf({4, 2}, std::vector<double>(8, 0.0));
  try {
    nn::matmul(a, b);
    FAIL("expected ShapeError");
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("(2,3)") != std::string::npos);
    CHECK(msg.find("(4,2)") != std::string::npos);
  }
}

TEST_CASE("adam: zero grad keeps params; first step is -lr; deterministic") {
  // Zero gradient: parameters unchanged.
  Tensor p = Tensor::leaf({3}, {1.0, -2.0, 0.5}, true, "p");
  nn::AdamConfig cfg;
  cfg.lr = 0.1;
  nn::Adam opt({p}, cfg);
  opt.step();
  CHECK(p.val() == std::vector<double>{1.0, -2.0, 0.5});

  // Scalar with unit gradient: first bias-corrected step is ~ -lr.
  Tensor w = Tensor::leaf({1}, {0.0}, true, "w");
  nn::Adam opt2({w}, cfg);
  w.node()->ensure_grad();
  w.grad()[0] = 1.0;
  opt2.step();
  CHECK(w.val()[0] == doctest::Approx(-0.1).epsilon(1e-6));

  // Same seed, same trajectory, bitwise.
  auto run = [&](uint64_t seed) {
    Rng rng(seed);
    Tensor q = rand_leaf({4}, rng, true);
    nn::Adam o({q}, cfg);
    for (int step = 0; step < 25; ++step) {
      Tensor loss = nn::sum_all(nn::mul(q, q));
      nn::backward(loss);
      o.step();
    }
    return q.val();
  };
  CHECK(run(11) == run(11));

  // NaN gradients abort with diagnostics.
  Tensor bad = Tensor::leaf({1}, {0.0}, true, "theta");
  nn::Adam opt3({bad}, cfg);
  bad.node()->ensure_grad();
  bad.grad()[0] = std::nan("");
  try {
    opt3.step();
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("theta") != std::string::npos);
    CHECK(msg.find("step") != std::string::npos);
  }
}

TEST_CASE("no-grad mode skips graph construction") {
  Rng rng(10);
  Tensor a = rand_leaf({2, 2}, rng);
  {
    nn::NoGradGuard ng;
    Tensor y = nn::sum_all(nn::mul(a, a));
    CHECK_FALSE(y.requires_grad());
  }
  Tensor y = nn::sum_all(nn::mul(a, a));
  CHECK(y.requires_grad());
}

TEST_CASE("checkpoint: round trip preserves values and metadata") {
  namespace fs = std::filesystem;
  Rng rng(12);
  nn::ParamStore store;
  nn::Linear::create(store, "lin", 4, 3, rng);
  store.create("emb", {5}, nn::init_normal(5, 0.3, rng));

  fs::path dir = fs::temp_directory_path() / "rkd_tests" / "ckpt";
  fs::create_directories(dir);
  nn::CheckpointHeader header;
  header.kind = "student";
  header.config = {{"d_model", 4}};
  header.config_hash = "abc";
  header.seed = 99;
  nn::save_checkpoint(dir / "m.ckpt", header, store);

  auto loaded = nn::load_checkpoint(dir / "m.ckpt");
  CHECK(loaded.header.kind == "student");
  CHECK(loaded.header.seed == 99);
  CHECK(loaded.tensors.at("emb").second == store.get("emb").val());

  nn::ParamStore other;
  Rng rng2(13);
  nn::Linear::create(other, "lin", 4, 3, rng2);
  other.create("emb", {5}, nn::init_zeros(5));
  nn::restore_params(other, loaded);
  CHECK(other.get("lin.w").val() == store.get("lin.w").val());
  CHECK(nn::checkpoint_param_hash(other) == nn::checkpoint_param_hash(store));
}
