// rkd/eval/tsne.cc
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

#include "rkd/eval/tsne.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "rkd/common/error.h"
#include "rkd/common/rng.h"

namespace rkd {

namespace {

std::vector<double> pairwise_sq_dists(const std::vector<std::vector<double>>& x) {
  const size_t n = x.size();
  std::vector<double> d(n * n, 0.0);
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = i + 1; j < n; ++j) {
      double acc = 0.0;
      for (size_t k = 0; k < x[i].size(); ++k) {
        const double diff = x[i][k] - x[j][k];
        acc += diff * diff;
      }
      d[i * n + j] = acc;
      d[j * n + i] = acc;
    }
  }
  return d;
}

}  // namespace

std::vector<std::array<double, 2>> tsne(
    const std::vector<std::vector<double>>& x, double perplexity, int iters,
    uint64_t seed, TsneStats* stats) {
  const size_t n = x.size();
  if (n < 4) throw ConfigError("tsne: need at least 4 points");
  if (!(perplexity > 0.0) ||
      perplexity >= (static_cast<double>(n) - 1.0) / 3.0)
    throw ConfigError("tsne: perplexity must lie in (0, (n-1)/3)");
  if (iters < 10) throw ConfigError("tsne: too few iterations");

  // Jitter exact duplicates so conditional distributions stay defined.
  std::vector<std::vector<double>> data = x;
  {
    auto d = pairwise_sq_dists(data);
    bool dup = false;
    for (size_t i = 0; i < n && !dup; ++i)
      for (size_t j = i + 1; j < n; ++j)
        if (d[i * n + j] == 0.0) {
          dup = true;
          break;
        }
    if (dup) {
      Rng jrng = Rng::substream(seed, "tsne_jitter");
      for (auto& row : data)
        for (auto& v : row) v += 1e-8 * jrng.normal();
    }
  }

  const auto d2 = pairwise_sq_dists(data);

  // Per-row bandwidth binary search to the target perplexity.
  std::vector<double> p(n * n, 0.0);
  double max_perp_err = 0.0;
  for (size_t i = 0; i < n; ++i) {
    double beta = 1.0, beta_min = 0.0,
           beta_max = std::numeric_limits<double>::infinity();
    double perp = 0.0;
    std::vector<double> row(n, 0.0);
    for (int it = 0; it < 200; ++it) {
      double sum = 0.0;
      for (size_t j = 0; j < n; ++j) {
        row[j] = i == j ? 0.0 : std::exp(-beta * d2[i * n + j]);
        sum += row[j];
      }
      // Entropy in the underflow-safe form H = log(sum) + beta * E[d^2].
      double weighted_d2 = 0.0;
      for (size_t j = 0; j < n; ++j) weighted_d2 += row[j] * d2[i * n + j];
      const double h = std::log(sum) + beta * weighted_d2 / sum;
      perp = std::exp(h);
      if (std::fabs(perp - perplexity) < 1e-4) break;
      if (perp > perplexity) {
        beta_min = beta;
        beta = std::isinf(beta_max) ? beta * 2.0 : (beta + beta_max) / 2.0;
      } else {
        beta_max = beta;
        beta = (beta + beta_min) / 2.0;
      }
      for (size_t j = 0; j < n; ++j)
        row[j] = i == j ? 0.0 : std::exp(-beta * d2[i * n + j]);
    }
    double sum = 0.0;
    for (double v : row) sum += v;
    for (size_t j = 0; j < n; ++j) p[i * n + j] = row[j] / sum;
    max_perp_err = std::max(max_perp_err, std::fabs(perp - perplexity));
  }
  if (stats) stats->max_perplexity_error = max_perp_err;

  // Symmetrize.
  std::vector<double> pij(n * n, 0.0);
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j < n; ++j)
      pij[i * n + j] =
          std::max((p[i * n + j] + p[j * n + i]) / (2.0 * n), 1e-12);

  auto kl_divergence = [&](const std::vector<std::array<double, 2>>& y) {
    double sum_q = 0.0;
    std::vector<double> w(n * n, 0.0);
    for (size_t i = 0; i < n; ++i)
      for (size_t j = i + 1; j < n; ++j) {
        const double dx = y[i][0] - y[j][0], dy = y[i][1] - y[j][1];
        const double q = 1.0 / (1.0 + dx * dx + dy * dy);
        w[i * n + j] = q;
        w[j * n + i] = q;
        sum_q += 2.0 * q;
      }
    double kl = 0.0;
    for (size_t i = 0; i < n; ++i)
      for (size_t j = 0; j < n; ++j) {
        if (i == j) continue;
        const double q = std::max(w[i * n + j] / sum_q, 1e-12);
        kl += pij[i * n + j] * std::log(pij[i * n + j] / q);
      }
    return kl;
  };

  // Init.
  Rng rng = Rng::substream(seed, "tsne_init");
  std::vector<std::array<double, 2>> y(n);
  for (auto& pt : y) pt = {1e-4 * rng.normal(), 1e-4 * rng.normal()};

  if (stats) stats->initial_kl = kl_divergence(y);

  const int exaggeration_iters = std::min(100, iters / 4);
  const double exaggeration = 12.0;
  const double lr = 200.0;
  std::vector<std::array<double, 2>> vel(n, {0.0, 0.0});
  std::vector<std::array<double, 2>> gains(n, {1.0, 1.0});
  std::vector<double> q(n * n, 0.0);

  for (int it = 0; it < iters; ++it) {
    const double ex = it < exaggeration_iters ? exaggeration : 1.0;
    const double momentum = it < iters / 2 ? 0.5 : 0.8;

    double sum_q = 0.0;
    for (size_t i = 0; i < n; ++i)
      for (size_t j = i + 1; j < n; ++j) {
        const double dx = y[i][0] - y[j][0], dy = y[i][1] - y[j][1];
        const double w = 1.0 / (1.0 + dx * dx + dy * dy);
        q[i * n + j] = w;
        q[j * n + i] = w;
        sum_q += 2.0 * w;
      }

    // Full gradient first, then the coupled update: per-point in-place
    // moves would feed forward into later points' gradients.
    std::vector<std::array<double, 2>> grad(n, {0.0, 0.0});
    for (size_t i = 0; i < n; ++i) {
      double gx = 0.0, gy = 0.0;
      for (size_t j = 0; j < n; ++j) {
        if (i == j) continue;
        const double w = q[i * n + j];
        const double mult = (ex * pij[i * n + j] - w / sum_q) * w;
        gx += mult * (y[i][0] - y[j][0]);
        gy += mult * (y[i][1] - y[j][1]);
      }
      grad[i] = {gx, gy};
    }
    for (size_t i = 0; i < n; ++i) {
      for (int c = 0; c < 2; ++c) {
        const double g = grad[i][c];
        auto& gain = gains[i][c];
        gain = (g > 0.0) == (vel[i][c] > 0.0) ? std::max(gain * 0.8, 0.01)
                                              : gain + 0.2;
        vel[i][c] = momentum * vel[i][c] - lr * gain * g;
        y[i][c] += vel[i][c];
      }
    }

    // Keep the embedding centered.
    double mx = 0.0, my = 0.0;
    for (const auto& pt : y) {
      mx += pt[0];
      my += pt[1];
    }
    mx /= n;
    my /= n;
    for (auto& pt : y) {
      pt[0] -= mx;
      pt[1] -= my;
    }
  }

  if (stats) stats->final_kl = kl_divergence(y);
  return y;
}

namespace {

template <typename PointT, typename DistFn>
double silhouette_impl(const std::vector<PointT>& points,
                       const std::vector<int>& labels, DistFn dist) {
  const size_t n = points.size();
  if (n != labels.size()) throw ShapeError("silhouette: size mismatch");
  std::map<int, std::vector<size_t>> clusters;
  for (size_t i = 0; i < n; ++i) clusters[labels[i]].push_back(i);
  if (clusters.size() < 2)
    throw ConfigError("silhouette: need at least 2 labels");
  for (const auto& [label, members] : clusters)
    if (members.size() < 2)
      throw ConfigError("silhouette: singleton class " +
                        std::to_string(label));

  double total = 0.0;
  for (size_t i = 0; i < n; ++i) {
    double a = 0.0;
    const auto& own = clusters[labels[i]];
    for (size_t j : own)
      if (j != i) a += dist(points[i], points[j]);
    a /= static_cast<double>(own.size() - 1);

    double b = std::numeric_limits<double>::infinity();
    for (const auto& [label, members] : clusters) {
      if (label == labels[i]) continue;
      double m = 0.0;
      for (size_t j : members) m += dist(points[i], points[j]);
      b = std::min(b, m / static_cast<double>(members.size()));
    }
    const double denom = std::max(a, b);
    total += denom > 0.0 ? (b - a) / denom : 0.0;  // identical points: 0
  }
  return total / static_cast<double>(n);
}

}  // namespace

double silhouette(const std::vector<std::array<double, 2>>& points,
                  const std::vector<int>& labels) {
  return silhouette_impl(points, labels,
                         [](const std::array<double, 2>& a,
                            const std::array<double, 2>& b) {
                           const double dx = a[0] - b[0], dy = a[1] - b[1];
                           return std::sqrt(dx * dx + dy * dy);
                         });
}

double silhouette_highd(const std::vector<std::vector<double>>& points,
                        const std::vector<int>& labels) {
  return silhouette_impl(points, labels,
                         [](const std::vector<double>& a,
                            const std::vector<double>& b) {
                           double acc = 0.0;
                           for (size_t k = 0; k < a.size(); ++k) {
                             const double d = a[k] - b[k];
                             acc += d * d;
                           }
                           return std::sqrt(acc);
                         });
}

}  // namespace rkd
