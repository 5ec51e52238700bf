// rkd/speech/kmeans.h
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

#ifndef RKD_SPEECH_KMEANS_H_
#define RKD_SPEECH_KMEANS_H_

#include <cstdint>
#include <vector>

namespace rkd {

struct KmeansResult {
  std::vector<std::vector<double>> centroids;  // K rows
  std::vector<double> inertia_trace;           // per Lloyd iteration
};

// Lloyd's algorithm with k-means++ seeding; deterministic in `seed`.
// Empty clusters are re-seeded from the point farthest from its centroid.
KmeansResult kmeans_fit(const std::vector<std::vector<double>>& features,
                        int k, int iters, uint64_t seed);

// Index of the nearest centroid under squared L2.
int kmeans_assign(const std::vector<std::vector<double>>& centroids,
                  const std::vector<double>& x);

}  // namespace rkd

#endif  // RKD_SPEECH_KMEANS_H_
