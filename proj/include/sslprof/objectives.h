// Copyright (c) 2026 The sslprof Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SSLPROF_OBJECTIVES_H_
#define SSLPROF_OBJECTIVES_H_

#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "sslprof/model.h"

namespace sslprof {

struct LossWeights {
  double alpha = 1.0;  // height
  double beta = 1.0;   // age
  double gamma = 0.1;  // gender
};

// Standardized height/age and the binary gender target (male 0, female 1).
// Fields for inactive tasks may be absent.
struct ProfileTarget {
  std::optional<double> height;
  std::optional<double> age;
  std::optional<double> gender;
};

struct LossBreakdown {
  double l_p = 0.0;
  double l_repr = 0.0;
  double l_c = 0.0;
  double total = 0.0;
};

template <typename Real>
Real Sigmoid(Real x) {
  return x >= 0 ? Real(1) / (Real(1) + std::exp(-x))
                : std::exp(x) / (Real(1) + std::exp(x));
}

// log(1 + e^x) without overflow.
template <typename Real>
Real Softplus(Real x) {
  return std::max(x, Real(0)) + std::log1p(std::exp(-std::abs(x)));
}

// Binary cross-entropy of logistic(logit) against a target in [0, 1].
template <typename Real>
Real LogitBce(Real logit, Real target) {
  return Softplus(logit) - target * logit;
}

// Per-head weights after applying the task mode: the multi-task weights in
// multi mode, a single unit weight on the active head otherwise.
struct HeadWeights {
  double height = 0.0;
  double age = 0.0;
  double gender = 0.0;
};
HeadWeights ActiveHeadWeights(const LossWeights& weights, TaskMode mode);

// alpha*MSE(height) + beta*MSE(age) + gamma*BCE(gender), batch-mean reduced.
// `grad`, when given, receives dL/dprediction for every row.
template <typename Real>
Real SupervisedProfileLoss(std::span<const ProfilePrediction<Real>> preds,
                           std::span<const ProfileTarget> targets,
                           const LossWeights& weights, TaskMode mode,
                           std::vector<ProfilePrediction<Real>>* grad = nullptr);

// BCE form of the pair objective to be minimized:
//   -(mean log sigmoid(pos) + mean log sigmoid(-neg)).
template <typename Real>
Real RepresentationLoss(std::span<const Real> pos_logits, std::span<const Real> neg_logits,
                        std::vector<Real>* d_pos = nullptr,
                        std::vector<Real>* d_neg = nullptr);

enum class ConsistencyGradient {
  kStopGradient,  // the positive branch is a fixed target
  kSymmetric,     // gradients flow into both branches
};

// The profile loss applied between two utterances of one speaker; the
// positive branch's outputs (gender as a probability) act as the targets.
template <typename Real>
Real ConsistencyLoss(std::span<const ProfilePrediction<Real>> anchor,
                     std::span<const ProfilePrediction<Real>> positive,
                     const LossWeights& weights, TaskMode mode,
                     ConsistencyGradient gradient_mode = ConsistencyGradient::kStopGradient,
                     std::vector<ProfilePrediction<Real>>* d_anchor = nullptr,
                     std::vector<ProfilePrediction<Real>>* d_positive = nullptr);

// Sum of the three paths. Throws on non-finite input.
LossBreakdown TotalLoss(double l_p, double l_repr, double l_c);

}  // namespace sslprof

#endif  // SSLPROF_OBJECTIVES_H_
