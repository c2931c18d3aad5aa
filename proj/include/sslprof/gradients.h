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

#ifndef SSLPROF_GRADIENTS_H_
#define SSLPROF_GRADIENTS_H_

#include <cstddef>
#include <vector>

#include "sslprof/model.h"
#include "sslprof/objectives.h"

namespace sslprof {

struct SupervisedBatch {
  std::vector<std::vector<float>> waveforms;
  std::vector<ProfileTarget> targets;
};

// Aligned (anchor, positive, negative) waveform rows.
struct TripletWaveforms {
  std::vector<std::vector<float>> anchors;
  std::vector<std::vector<float>> positives;
  std::vector<std::vector<float>> negatives;

  std::size_t size() const { return anchors.size(); }
};

// A disabled path and a path with weight 0 both contribute exactly zero.
struct PathSwitches {
  bool representation = true;
  bool consistency = true;
  double representation_weight = 1.0;
  double consistency_weight = 1.0;
  ConsistencyGradient consistency_gradient = ConsistencyGradient::kStopGradient;
};

// Scalar objective over one mixed batch:
//   L_p(supervised) + w_r * L_repr(triplets) + w_c * L_c(triplets)
//   + param_l2 * sum(theta^2)
// The L2 term exists for exercising the gradient machinery; training leaves
// it at zero.
struct LossGraph {
  const SupervisedBatch* supervised = nullptr;
  const TripletWaveforms* triplets = nullptr;
  LossWeights weights;
  PathSwitches paths;
  double param_l2 = 0.0;
  // When set, the positive branch of the consistency loss is evaluated with
  // these fixed parameters, so the forward value is the function that the
  // stop-gradient backward differentiates. Read by the double instantiation
  // only.
  const ModelParams<double>* consistency_reference = nullptr;
};

struct ExecOptions {
  int threads = 1;
  // Above this estimate the encoder forward is recomputed during the
  // backward pass instead of keeping every activation alive.
  std::size_t activation_budget_bytes = std::size_t{1} << 30;
};

template <typename Real>
struct LatentGradients {
  Matrix<Real> supervised;
  Matrix<Real> anchor;
  Matrix<Real> positive;
  Matrix<Real> negative;
};

template <typename Real>
struct GradientResult {
  double value = 0.0;      // full scalar, including the L2 term
  LossBreakdown paths;     // weighted path values, total = l_p + l_repr + l_c
  ModelParams<Real> grads;
  LatentGradients<Real> latent;  // dL/dz per encoded waveform
};

template <typename Real>
GradientResult<Real> ParameterGradients(const ModelParams<Real>& params,
                                        const ModelConfig& config, const LossGraph& graph,
                                        const ExecOptions& exec = {});

// Forward-only evaluation of the same scalar. `trace` observes every ReLU.
template <typename Real>
double EvaluateLoss(const ModelParams<Real>& params, const ModelConfig& config,
                    const LossGraph& graph, ReluTrace* trace = nullptr,
                    LossBreakdown* paths = nullptr, const ExecOptions& exec = {});

// Number of fixed accumulation chunks for the encoder backward. Per-chunk
// gradients are summed in chunk order so results do not depend on threads.
constexpr std::size_t kGradientChunks = 8;

}  // namespace sslprof

#endif  // SSLPROF_GRADIENTS_H_
