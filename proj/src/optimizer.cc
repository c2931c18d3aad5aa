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

#include "sslprof/optimizer.h"

#include <cmath>
#include <stdexcept>
#include <string>

namespace sslprof {

template <typename Real>
OptState<Real> DiffGradInit(const ModelParams<Real>& params, const DiffGradHyper& hyper) {
  OptState<Real> state;
  state.hyper = hyper;
  for (const auto& t : params.Named()) {
    state.m.emplace_back(t.tensor->shape);
    state.v.emplace_back(t.tensor->shape);
    state.g_prev.emplace_back(t.tensor->shape);
  }
  return state;
}

template <typename Real>
void DiffGradUpdate(std::span<Real> theta, std::span<const Real> grad, std::span<Real> m,
                    std::span<Real> v, std::span<Real> g_prev, std::uint64_t t,
                    const DiffGradHyper& hyper) {
  const Real b1 = static_cast<Real>(hyper.beta1);
  const Real b2 = static_cast<Real>(hyper.beta2);
  const Real lr = static_cast<Real>(hyper.lr);
  const Real eps = static_cast<Real>(hyper.epsilon);
  const Real bc1 = static_cast<Real>(1.0 - std::pow(hyper.beta1, static_cast<double>(t)));
  const Real bc2 = static_cast<Real>(1.0 - std::pow(hyper.beta2, static_cast<double>(t)));
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const Real g = grad[i];
    m[i] = b1 * m[i] + (Real(1) - b1) * g;
    v[i] = b2 * v[i] + (Real(1) - b2) * g * g;
    const Real m_hat = m[i] / bc1;
    const Real v_hat = v[i] / bc2;
    const Real xi =
        hyper.friction ? Real(1) / (Real(1) + std::exp(-std::abs(g_prev[i] - g))) : Real(1);
    theta[i] -= lr * xi * m_hat / (std::sqrt(v_hat) + eps);
    g_prev[i] = g;
  }
}

template <typename Real>
void DiffGradStep(ModelParams<Real>* params, const ModelParams<Real>& grads,
                  OptState<Real>* state) {
  auto p = params->Named();
  const auto g = grads.Named();
  if (p.size() != g.size() || p.size() != state->m.size()) {
    throw std::invalid_argument("gradient/state layout does not match parameters");
  }
  for (std::size_t a = 0; a < g.size(); ++a) {
    if (g[a].tensor->shape != p[a].tensor->shape) {
      throw std::invalid_argument("gradient shape mismatch for " + p[a].name);
    }
    if (!g[a].tensor->AsVector().allFinite()) {
      throw std::domain_error("non-finite gradient in " + g[a].name);
    }
  }
  state->step += 1;
  for (std::size_t a = 0; a < p.size(); ++a) {
    DiffGradUpdate<Real>(p[a].tensor->data, g[a].tensor->data, state->m[a].data,
                         state->v[a].data, state->g_prev[a].data, state->step, state->hyper);
  }
}

template OptState<float> DiffGradInit(const ModelParams<float>&, const DiffGradHyper&);
template OptState<double> DiffGradInit(const ModelParams<double>&, const DiffGradHyper&);
template void DiffGradUpdate(std::span<float>, std::span<const float>, std::span<float>,
                             std::span<float>, std::span<float>, std::uint64_t,
                             const DiffGradHyper&);
template void DiffGradUpdate(std::span<double>, std::span<const double>, std::span<double>,
                             std::span<double>, std::span<double>, std::uint64_t,
                             const DiffGradHyper&);
template void DiffGradStep(ModelParams<float>*, const ModelParams<float>&, OptState<float>*);
template void DiffGradStep(ModelParams<double>*, const ModelParams<double>&,
                           OptState<double>*);

}  // namespace sslprof
