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

#include "sslprof/objectives.h"

#include <stdexcept>
#include <string>

namespace sslprof {

HeadWeights ActiveHeadWeights(const LossWeights& weights, TaskMode mode) {
  switch (mode) {
    case TaskMode::kHeight: return {1.0, 0.0, 0.0};
    case TaskMode::kAge: return {0.0, 1.0, 0.0};
    case TaskMode::kGender: return {0.0, 0.0, 1.0};
    case TaskMode::kMulti: break;
  }
  return {weights.alpha, weights.beta, weights.gamma};
}

template <typename Real>
Real SupervisedProfileLoss(std::span<const ProfilePrediction<Real>> preds,
                           std::span<const ProfileTarget> targets,
                           const LossWeights& weights, TaskMode mode,
                           std::vector<ProfilePrediction<Real>>* grad) {
  if (preds.size() != targets.size()) {
    throw std::invalid_argument("prediction and target batches differ in size");
  }
  if (preds.empty()) throw std::invalid_argument("empty supervised batch");
  const HeadWeights w = ActiveHeadWeights(weights, mode);
  const bool use_h = mode == TaskMode::kHeight || mode == TaskMode::kMulti;
  const bool use_a = mode == TaskMode::kAge || mode == TaskMode::kMulti;
  const bool use_g = mode == TaskMode::kGender || mode == TaskMode::kMulti;
  const Real inv_b = Real(1) / static_cast<Real>(preds.size());
  if (grad) grad->assign(preds.size(), ProfilePrediction<Real>{});

  Real mse_h = 0, mse_a = 0, bce_g = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const auto& p = preds[i];
    const auto& t = targets[i];
    if ((use_h && !t.height) || (use_a && !t.age) || (use_g && !t.gender)) {
      throw std::invalid_argument("missing label for an active task in row " +
                                  std::to_string(i));
    }
    if (use_h) {
      const Real d = p.height - static_cast<Real>(*t.height);
      mse_h += d * d;
      if (grad) (*grad)[i].height = static_cast<Real>(2 * w.height) * d * inv_b;
    }
    if (use_a) {
      const Real d = p.age - static_cast<Real>(*t.age);
      mse_a += d * d;
      if (grad) (*grad)[i].age = static_cast<Real>(2 * w.age) * d * inv_b;
    }
    if (use_g) {
      const Real y = static_cast<Real>(*t.gender);
      bce_g += LogitBce(p.gender_logit, y);
      if (grad) {
        (*grad)[i].gender_logit =
            static_cast<Real>(w.gender) * (Sigmoid(p.gender_logit) - y) * inv_b;
      }
    }
  }
  Real loss = 0;
  if (use_h) loss += static_cast<Real>(w.height) * mse_h * inv_b;
  if (use_a) loss += static_cast<Real>(w.age) * mse_a * inv_b;
  if (use_g) loss += static_cast<Real>(w.gender) * bce_g * inv_b;
  return loss;
}

template <typename Real>
Real RepresentationLoss(std::span<const Real> pos_logits, std::span<const Real> neg_logits,
                        std::vector<Real>* d_pos, std::vector<Real>* d_neg) {
  if (pos_logits.empty() || neg_logits.empty()) {
    throw std::invalid_argument("empty pair batch");
  }
  if (pos_logits.size() != neg_logits.size()) {
    throw std::invalid_argument("positive and negative batches differ in size");
  }
  const Real inv_b = Real(1) / static_cast<Real>(pos_logits.size());
  Real pos_term = 0, neg_term = 0;
  if (d_pos) d_pos->resize(pos_logits.size());
  if (d_neg) d_neg->resize(neg_logits.size());
  for (std::size_t i = 0; i < pos_logits.size(); ++i) {
    // -log sigmoid(x) = softplus(-x); -log(1 - sigmoid(x)) = softplus(x)
    pos_term += Softplus(-pos_logits[i]);
    neg_term += Softplus(neg_logits[i]);
    if (d_pos) (*d_pos)[i] = -Sigmoid(-pos_logits[i]) * inv_b;
    if (d_neg) (*d_neg)[i] = Sigmoid(neg_logits[i]) * inv_b;
  }
  return pos_term * inv_b + neg_term * inv_b;
}

template <typename Real>
Real ConsistencyLoss(std::span<const ProfilePrediction<Real>> anchor,
                     std::span<const ProfilePrediction<Real>> positive,
                     const LossWeights& weights, TaskMode mode,
                     ConsistencyGradient gradient_mode,
                     std::vector<ProfilePrediction<Real>>* d_anchor,
                     std::vector<ProfilePrediction<Real>>* d_positive) {
  if (anchor.size() != positive.size()) {
    throw std::invalid_argument("anchor and positive batches differ in size");
  }
  if (anchor.empty()) throw std::invalid_argument("empty consistency batch");
  const HeadWeights w = ActiveHeadWeights(weights, mode);
  const bool use_h = mode == TaskMode::kHeight || mode == TaskMode::kMulti;
  const bool use_a = mode == TaskMode::kAge || mode == TaskMode::kMulti;
  const bool use_g = mode == TaskMode::kGender || mode == TaskMode::kMulti;
  const bool symmetric = gradient_mode == ConsistencyGradient::kSymmetric;
  const Real inv_b = Real(1) / static_cast<Real>(anchor.size());
  if (d_anchor) d_anchor->assign(anchor.size(), ProfilePrediction<Real>{});
  if (d_positive) d_positive->assign(anchor.size(), ProfilePrediction<Real>{});

  Real mse_h = 0, mse_a = 0, bce_g = 0;
  for (std::size_t i = 0; i < anchor.size(); ++i) {
    const auto& a = anchor[i];
    const auto& p = positive[i];
    ProfilePrediction<Real> da{}, dp{};
    if (use_h) {
      const Real d = a.height - p.height;
      mse_h += d * d;
      da.height = static_cast<Real>(2 * w.height) * d * inv_b;
      dp.height = -da.height;
    }
    if (use_a) {
      const Real d = a.age - p.age;
      mse_a += d * d;
      da.age = static_cast<Real>(2 * w.age) * d * inv_b;
      dp.age = -da.age;
    }
    if (use_g) {
      const Real target = Sigmoid(p.gender_logit);
      bce_g += LogitBce(a.gender_logit, target);
      da.gender_logit =
          static_cast<Real>(w.gender) * (Sigmoid(a.gender_logit) - target) * inv_b;
      // d/dp [softplus(a) - sigmoid(p) * a] = -a * sigmoid'(p)
      dp.gender_logit = -static_cast<Real>(w.gender) * a.gender_logit * target *
                        (Real(1) - target) * inv_b;
    }
    if (d_anchor) (*d_anchor)[i] = da;
    if (d_positive && symmetric) (*d_positive)[i] = dp;
  }
  Real loss = 0;
  if (use_h) loss += static_cast<Real>(w.height) * mse_h * inv_b;
  if (use_a) loss += static_cast<Real>(w.age) * mse_a * inv_b;
  if (use_g) loss += static_cast<Real>(w.gender) * bce_g * inv_b;
  return loss;
}

LossBreakdown TotalLoss(double l_p, double l_repr, double l_c) {
  if (!std::isfinite(l_p) || !std::isfinite(l_repr) || !std::isfinite(l_c)) {
    throw std::domain_error("non-finite loss term: l_p=" + std::to_string(l_p) +
                            " l_repr=" + std::to_string(l_repr) +
                            " l_c=" + std::to_string(l_c));
  }
  return {l_p, l_repr, l_c, l_p + l_repr + l_c};
}

#define SSLPROF_INSTANTIATE_OBJECTIVES(Real)                                            \
  template Real SupervisedProfileLoss(std::span<const ProfilePrediction<Real>>,          \
                                      std::span<const ProfileTarget>, const LossWeights&, \
                                      TaskMode, std::vector<ProfilePrediction<Real>>*);  \
  template Real RepresentationLoss(std::span<const Real>, std::span<const Real>,         \
                                   std::vector<Real>*, std::vector<Real>*);             \
  template Real ConsistencyLoss(std::span<const ProfilePrediction<Real>>,                \
                                std::span<const ProfilePrediction<Real>>,                \
                                const LossWeights&, TaskMode, ConsistencyGradient,       \
                                std::vector<ProfilePrediction<Real>>*,                   \
                                std::vector<ProfilePrediction<Real>>*);

SSLPROF_INSTANTIATE_OBJECTIVES(float)
SSLPROF_INSTANTIATE_OBJECTIVES(double)

#undef SSLPROF_INSTANTIATE_OBJECTIVES

}  // namespace sslprof
