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

#ifndef SSLPROF_LAYERS_H_
#define SSLPROF_LAYERS_H_

// Forward and backward kernels for the encoder and head layers. Activations
// are row-major: convolution stacks use [channels x time], the LSTM and the
// MLP heads use [time or batch x features].

#include <cstddef>
#include <cstdint>
#include <vector>

#include "sslprof/tensor.h"

namespace sslprof {

// Records the sign pattern of every ReLU input seen during a forward pass.
// Two passes with equal hashes took the same branch at every kink, which is
// what the finite-difference checker needs to know.
class ReluTrace {
 public:
  template <typename Real>
  void Observe(const Real* values, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
      const std::uint64_t state = values[i] > 0 ? 2 : (values[i] < 0 ? 0 : 1);
      hash_ = (hash_ ^ state) * 1099511628211ULL;
      if (values[i] == 0) ++exact_zeros_;
    }
  }
  // Folds another trace in; used to combine per-waveform traces in order.
  void Absorb(const ReluTrace& other) {
    hash_ = (hash_ ^ other.hash_) * 1099511628211ULL;
    exact_zeros_ += other.exact_zeros_;
  }
  std::uint64_t hash() const { return hash_; }
  std::size_t exact_zeros() const { return exact_zeros_; }

 private:
  std::uint64_t hash_ = 1469598103934665603ULL;
  std::size_t exact_zeros_ = 0;
};

std::size_t ConvOutputLength(std::size_t input_len, std::size_t kernel, std::size_t stride);

// weight: (out, in, kernel); input: [in x L]; returns [out x T].
template <typename Real>
Matrix<Real> Conv1dForward(const Tensor<Real>& weight, const Tensor<Real>& bias,
                           const Matrix<Real>& input, std::size_t stride);

// Accumulates into d_weight/d_bias. d_input may be null (first layer).
template <typename Real>
void Conv1dBackward(const Tensor<Real>& weight, const Matrix<Real>& input,
                    std::size_t stride, const Matrix<Real>& d_out,
                    Tensor<Real>* d_weight, Tensor<Real>* d_bias,
                    Matrix<Real>* d_input);

constexpr double kGroupNormEpsilon = 1e-5;

// Normalizes each channel group over (channels in group x time), then applies
// the per-channel affine transform. xhat/inv_std are filled for the backward.
template <typename Real>
Matrix<Real> GroupNormForward(const Matrix<Real>& x, std::size_t groups,
                              const Tensor<Real>& scale, const Tensor<Real>& shift,
                              Matrix<Real>* xhat, std::vector<Real>* inv_std);

template <typename Real>
void GroupNormBackward(const Matrix<Real>& xhat, const std::vector<Real>& inv_std,
                       std::size_t groups, const Tensor<Real>& scale,
                       const Matrix<Real>& d_out, Matrix<Real>* d_input,
                       Tensor<Real>* d_scale, Tensor<Real>* d_shift);

template <typename Real>
struct LstmCache {
  Matrix<Real> input;   // [T x in]
  Matrix<Real> gates;   // [T x 4H], activated, order i f g o
  Matrix<Real> cell;    // [(T+1) x H], row 0 is the zero state
  Matrix<Real> hidden;  // [(T+1) x H]
};

// Single-layer unidirectional LSTM over x [T x in]; returns the final hidden
// state. w_ih: (4H, in), w_hh: (4H, H), bias: (4H).
template <typename Real>
Vector<Real> LstmForward(const Tensor<Real>& w_ih, const Tensor<Real>& w_hh,
                         const Tensor<Real>& bias, const Matrix<Real>& x,
                         LstmCache<Real>* cache);

template <typename Real>
void LstmBackward(const Tensor<Real>& w_ih, const Tensor<Real>& w_hh,
                  const LstmCache<Real>& cache, const Vector<Real>& d_final_hidden,
                  Tensor<Real>* d_w_ih, Tensor<Real>* d_w_hh, Tensor<Real>* d_bias,
                  Matrix<Real>* d_input);

template <typename Real>
struct LinearLayer {
  Tensor<Real> weight;  // (out, in)
  Tensor<Real> bias;    // (out)
};

template <typename Real>
struct MlpCache {
  std::vector<Matrix<Real>> inputs;       // input of every layer
  std::vector<Matrix<Real>> pre_activations;  // hidden layers only
};

// ReLU after every layer except the last. x: [B x in].
template <typename Real>
Matrix<Real> MlpForward(const std::vector<LinearLayer<Real>>& layers,
                        const Matrix<Real>& x, MlpCache<Real>* cache,
                        ReluTrace* trace = nullptr);

template <typename Real>
void MlpBackward(const std::vector<LinearLayer<Real>>& layers,
                 const MlpCache<Real>& cache, const Matrix<Real>& d_out,
                 std::vector<LinearLayer<Real>>* grads, Matrix<Real>* d_input);

}  // namespace sslprof

#endif  // SSLPROF_LAYERS_H_
