// tests/testutil.h
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
// Test-only helpers: the finite-difference gradient oracle shared by the
// unit suite and the acceptance suite.  Central differences stay
// independent from the reverse-mode path they check.

#ifndef RKD_TESTS_TESTUTIL_H_
#define RKD_TESTS_TESTUTIL_H_

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "rkd/nn/tensor.h"

namespace rkd::testutil {

struct GradcheckReport {
  double max_rel_err = 0.0;
  std::string worst;  // "param[i]"
  int checked = 0;
};

// Compares reverse-mode gradients of the scalar `f()` against central finite
// differences (step h) on every entry of `params`.  `f` must be a pure
// function of the current parameter values.
inline GradcheckReport gradcheck(const std::function<nn::Tensor()>& f,
                                 const std::vector<nn::Tensor>& params,
                                 double h = 1e-5) {
  GradcheckReport report;

  for (const auto& p : params) {
    auto& g = p.node()->grad;
    std::fill(g.begin(), g.end(), 0.0);
  }
  nn::Tensor loss = f();
  nn::backward(loss);

  std::vector<std::vector<double>> analytic;
  for (const auto& p : params) {
    p.node()->ensure_grad();
    analytic.push_back(p.node()->grad);
  }

  for (size_t pi = 0; pi < params.size(); ++pi) {
    auto& vals = params[pi].node()->val;
    for (size_t i = 0; i < vals.size(); ++i) {
      const double saved = vals[i];
      vals[i] = saved + h;
      const double up = f().item();
      vals[i] = saved - h;
      const double down = f().item();
      vals[i] = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double a = analytic[pi][i];
      const double rel = std::fabs(a - numeric) /
                         std::max({1.0, std::fabs(a), std::fabs(numeric)});
      ++report.checked;
      if (rel > report.max_rel_err) {
        report.max_rel_err = rel;
        report.worst = params[pi].name().empty()
                           ? "param" + std::to_string(pi)
                           : params[pi].name();
        report.worst += "[" + std::to_string(i) + "]";
      }
    }
    std::fill(params[pi].node()->grad.begin(), params[pi].node()->grad.end(),
              0.0);
  }
  return report;
}

}  // namespace rkd::testutil

#endif  // RKD_TESTS_TESTUTIL_H_
