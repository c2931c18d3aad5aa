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

#ifndef SSLPROF_OPTIMIZER_H_
#define SSLPROF_OPTIMIZER_H_

#include <cstdint>
#include <span>
#include <vector>

#include "sslprof/model.h"

namespace sslprof {

struct DiffGradHyper {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  // When false the friction coefficient is pinned to 1, which is plain Adam.
  bool friction = true;
};

// Per-array moments and previous gradient, aligned with ModelParams::Named().
template <typename Real>
struct OptState {
  DiffGradHyper hyper;
  std::uint64_t step = 0;
  std::vector<Tensor<Real>> m;
  std::vector<Tensor<Real>> v;
  std::vector<Tensor<Real>> g_prev;
};

template <typename Real>
OptState<Real> DiffGradInit(const ModelParams<Real>& params, const DiffGradHyper& hyper = {});

// One elementwise update for a single array at step `t` (1-based, already
// incremented). Exposed for scalar cross-checks.
template <typename Real>
void DiffGradUpdate(std::span<Real> theta, std::span<const Real> grad, std::span<Real> m,
                    std::span<Real> v, std::span<Real> g_prev, std::uint64_t t,
                    const DiffGradHyper& hyper);

// Advances the step counter and updates every parameter array. Throws
// std::domain_error, leaving params and state untouched, if any gradient
// entry is non-finite.
template <typename Real>
void DiffGradStep(ModelParams<Real>* params, const ModelParams<Real>& grads,
                  OptState<Real>* state);

}  // namespace sslprof

#endif  // SSLPROF_OPTIMIZER_H_
