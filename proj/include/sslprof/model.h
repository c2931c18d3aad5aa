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

#ifndef SSLPROF_MODEL_H_
#define SSLPROF_MODEL_H_

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sslprof/layers.h"
#include "sslprof/rng.h"
#include "sslprof/tensor.h"

namespace sslprof {

enum class TaskMode { kHeight, kAge, kGender, kMulti };

TaskMode ParseTaskMode(std::string_view name);
std::string TaskModeName(TaskMode mode);

// Architecture of the encoder f, regressor h and discriminator g.
struct ModelConfig {
  std::size_t conv_channels = 512;
  std::vector<std::size_t> kernel_sizes{10, 8, 4, 4, 4};
  std::vector<std::size_t> strides{5, 4, 2, 2, 2};
  std::size_t latent_dim = 512;
  std::vector<std::size_t> regressor_hidden{512, 128};
  std::vector<std::size_t> discriminator_hidden{1024, 128};
  std::size_t groupnorm_groups = 16;
  TaskMode task_mode = TaskMode::kMulti;

  void Validate() const;

  // Frame count after every convolution layer. Throws when the input is too
  // short to leave at least one frame after the last layer.
  std::vector<std::size_t> FrameCounts(std::size_t input_len) const;

  // Smallest input length that yields one frame after the last layer.
  std::size_t MinInputLength() const;
};

bool operator==(const ModelConfig& a, const ModelConfig& b);

constexpr std::size_t kRegressorOutputs = 3;  // height, age, gender logit

template <typename Real>
struct ConvBlock {
  Tensor<Real> weight;      // (out, in, kernel)
  Tensor<Real> bias;        // (out)
  Tensor<Real> norm_scale;  // (out)
  Tensor<Real> norm_shift;  // (out)
};

template <typename Real>
struct LstmParams {
  Tensor<Real> w_ih;  // (4N, channels)
  Tensor<Real> w_hh;  // (4N, N)
  Tensor<Real> bias;  // (4N), gate order i f g o
};

template <typename Real>
struct NamedTensor {
  std::string name;
  Tensor<Real>* tensor;
};

template <typename Real>
struct ConstNamedTensor {
  std::string name;
  const Tensor<Real>* tensor;
};

template <typename Real>
struct ModelParams {
  std::vector<ConvBlock<Real>> conv;
  LstmParams<Real> lstm;
  std::vector<LinearLayer<Real>> regressor;
  std::vector<LinearLayer<Real>> discriminator;

  // Every array in canonical order with a unique dotted name.
  std::vector<NamedTensor<Real>> Named();
  std::vector<ConstNamedTensor<Real>> Named() const;
  std::size_t ParameterCount() const;
};

enum class ParamGroup { kEncoder, kRegressor, kDiscriminator };
ParamGroup GroupOf(std::string_view param_name);

// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, zero biases, unit
// group-norm scale, forget-gate bias 1. Values are drawn in double so the
// float and double instantiations agree up to rounding.
template <typename Real>
ModelParams<Real> InitParams(const ModelConfig& config, Rng& rng);

// Same shapes as `params`, all zero.
template <typename Real>
ModelParams<Real> ZerosLike(const ModelParams<Real>& params);

template <typename To, typename From>
ModelParams<To> CastParams(const ModelParams<From>& params);

template <typename Real>
void AddInto(ModelParams<Real>* dst, const ModelParams<Real>& src);

// Throws if any array of `params` disagrees in shape with `config`.
template <typename Real>
void CheckShapes(const ModelParams<Real>& params, const ModelConfig& config);

template <typename Real>
struct ProfilePrediction {
  Real height = 0;
  Real age = 0;
  Real gender_logit = 0;
};

template <typename Real>
struct ConvLayerCache {
  Matrix<Real> input;
  Matrix<Real> xhat;
  Matrix<Real> affine;  // group-norm output before ReLU
  std::vector<Real> inv_std;
};

template <typename Real>
struct EncoderCache {
  std::vector<ConvLayerCache<Real>> conv;
  LstmCache<Real> lstm;
};

// f: one waveform to its latent code (final LSTM hidden state).
template <typename Real>
Vector<Real> EncodeWaveform(const ModelParams<Real>& params, const ModelConfig& config,
                            std::span<const float> samples,
                            EncoderCache<Real>* cache = nullptr,
                            ReluTrace* trace = nullptr);

// Batch of waveforms (lengths may differ) to a [B x N] latent matrix. Rows are
// independent, so `threads` only changes wall time.
template <typename Real>
Matrix<Real> EncoderForward(const ModelParams<Real>& params, const ModelConfig& config,
                            const std::vector<std::vector<float>>& batch,
                            int threads = 1);

// Accumulates encoder gradients for one waveform given dL/dz.
template <typename Real>
void EncoderBackward(const ModelParams<Real>& params, const ModelConfig& config,
                     const EncoderCache<Real>& cache, const Vector<Real>& d_latent,
                     ModelParams<Real>* grads);

// h: [B x N] latents to [B x 3] raw outputs (height, age, gender logit).
template <typename Real>
Matrix<Real> RegressorForward(const ModelParams<Real>& params, const Matrix<Real>& latent,
                              MlpCache<Real>* cache = nullptr, ReluTrace* trace = nullptr);

template <typename Real>
std::vector<ProfilePrediction<Real>> ToPredictions(const Matrix<Real>& outputs);

// g: pair logits for rows of [z1 ; z2]. Order matters: g(a, b) != g(b, a).
template <typename Real>
Vector<Real> DiscriminatorForward(const ModelParams<Real>& params,
                                  const Matrix<Real>& first, const Matrix<Real>& second,
                                  MlpCache<Real>* cache = nullptr,
                                  ReluTrace* trace = nullptr);

}  // namespace sslprof

#endif  // SSLPROF_MODEL_H_
