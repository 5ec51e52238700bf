// rkd/eval/tsne.h
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

#ifndef RKD_EVAL_TSNE_H_
#define RKD_EVAL_TSNE_H_

#include <array>
#include <cstdint>
#include <vector>

namespace rkd {

struct TsneStats {
  double initial_kl = 0.0;
  double final_kl = 0.0;
  // Largest |row perplexity - target| after the bandwidth binary search.
  double max_perplexity_error = 0.0;
};

// Exact (non-approximate) t-SNE to 2-D: per-row bandwidths found by binary
// search to match the target perplexity within 1e-4, symmetrized
// affinities, gradient descent with momentum and early exaggeration.
// Duplicate input rows are separated by a tiny seeded jitter.
std::vector<std::array<double, 2>> tsne(
    const std::vector<std::vector<double>>& x, double perplexity, int iters,
    uint64_t seed, TsneStats* stats = nullptr);

// Mean silhouette over Euclidean distance; labels must contain >= 2 classes
// with >= 2 points each.  Degenerate all-identical points score 0.
double silhouette(const std::vector<std::array<double, 2>>& points,
                  const std::vector<int>& labels);
double silhouette_highd(const std::vector<std::vector<double>>& points,
                        const std::vector<int>& labels);

}  // namespace rkd

#endif  // RKD_EVAL_TSNE_H_
