// rkd/speech/kmeans.cc
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

#include "rkd/speech/kmeans.h"

#include <cmath>
#include <limits>

#include "rkd/common/error.h"
#include "rkd/common/rng.h"

namespace rkd {

namespace {

double sq_dist(const std::vector<double>& a, const std::vector<double>& b) {
  double acc = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc;
}

}  // namespace

int kmeans_assign(const std::vector<std::vector<double>>& centroids,
                  const std::vector<double>& x) {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (size_t k = 0; k < centroids.size(); ++k) {
    const double d = sq_dist(centroids[k], x);
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(k);
    }
  }
  return best;
}

KmeansResult kmeans_fit(const std::vector<std::vector<double>>& features,
                        int k, int iters, uint64_t seed) {
  const size_t n = features.size();
  if (k <= 0 || static_cast<size_t>(k) > n)
    throw ConfigError("kmeans_fit: need 0 < K <= #frames, got K=" +
                      std::to_string(k) + " with " + std::to_string(n) +
                      " frames");
  const size_t dim = features[0].size();
  Rng rng = Rng::substream(seed, "kmeans");

  // k-means++ seeding.
  KmeansResult result;
  result.centroids.push_back(features[rng.uniform_int(n)]);
  std::vector<double> d2(n);
  for (int c = 1; c < k; ++c) {
    double total = 0.0;
    for (size_t i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& cent : result.centroids)
        best = std::min(best, sq_dist(cent, features[i]));
      d2[i] = best;
      total += best;
    }
    if (total <= 0.0) {
      result.centroids.push_back(features[rng.uniform_int(n)]);
      continue;
    }
    double r = rng.uniform() * total;
    size_t pick = n - 1;
    for (size_t i = 0; i < n; ++i) {
      r -= d2[i];
      if (r <= 0.0) {
        pick = i;
        break;
      }
    }
    result.centroids.push_back(features[pick]);
  }

  std::vector<int> assign(n, -1);
  for (int it = 0; it < iters; ++it) {
    // Assignment step.
    double inertia = 0.0;
    for (size_t i = 0; i < n; ++i) {
      assign[i] = kmeans_assign(result.centroids, features[i]);
      inertia += sq_dist(result.centroids[assign[i]], features[i]);
    }
    result.inertia_trace.push_back(inertia);

    // Update step.
    std::vector<std::vector<double>> sums(k, std::vector<double>(dim, 0.0));
    std::vector<int> counts(k, 0);
    for (size_t i = 0; i < n; ++i) {
      ++counts[assign[i]];
      for (size_t j = 0; j < dim; ++j) sums[assign[i]][j] += features[i][j];
    }
    for (int c = 0; c < k; ++c) {
      if (counts[c] == 0) {
        // Re-seed from the point farthest from its centroid.
        size_t far = 0;
        double far_d = -1.0;
        for (size_t i = 0; i < n; ++i) {
          const double d = sq_dist(result.centroids[assign[i]], features[i]);
          if (d > far_d) {
            far_d = d;
            far = i;
          }
        }
        result.centroids[c] = features[far];
      } else {
        for (size_t j = 0; j < dim; ++j)
          result.centroids[c][j] = sums[c][j] / counts[c];
      }
    }
  }

  // Final inertia after the last update.
  double inertia = 0.0;
  for (size_t i = 0; i < n; ++i)
    inertia +=
        sq_dist(result.centroids[kmeans_assign(result.centroids, features[i])],
                features[i]);
  result.inertia_trace.push_back(inertia);
  return result;
}

}  // namespace rkd
