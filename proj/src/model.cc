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

#include "sslprof/model.h"

#include <cmath>
#include <stdexcept>

#include "sslprof/parallel.h"

namespace sslprof {

TaskMode ParseTaskMode(std::string_view name) {
  if (name == "height") return TaskMode::kHeight;
  if (name == "age") return TaskMode::kAge;
  if (name == "gender") return TaskMode::kGender;
  if (name == "multi") return TaskMode::kMulti;
  throw std::invalid_argument("unknown task mode '" + std::string(name) +
                              "' (expected height, age, gender or multi)");
}

std::string TaskModeName(TaskMode mode) {
  switch (mode) {
    case TaskMode::kHeight: return "height";
    case TaskMode::kAge: return "age";
    case TaskMode::kGender: return "gender";
    case TaskMode::kMulti: return "multi";
  }
  return "multi";
}

void ModelConfig::Validate() const {
  if (kernel_sizes.size() != 5 || strides.size() != 5) {
    throw std::invalid_argument("encoder needs exactly 5 kernel sizes and 5 strides");
  }
  for (std::size_t i = 0; i < 5; ++i) {
    if (kernel_sizes[i] == 0 || strides[i] == 0) {
      throw std::invalid_argument("kernel sizes and strides must be positive");
    }
  }
  if (conv_channels == 0) throw std::invalid_argument("conv_channels must be positive");
  if (latent_dim == 0) throw std::invalid_argument("latent_dim must be positive");
  if (groupnorm_groups == 0 || conv_channels % groupnorm_groups != 0) {
    throw std::invalid_argument("groupnorm_groups must divide conv_channels");
  }
  for (auto w : regressor_hidden) {
    if (w == 0) throw std::invalid_argument("regressor hidden widths must be positive");
  }
  for (auto w : discriminator_hidden) {
    if (w == 0) throw std::invalid_argument("discriminator hidden widths must be positive");
  }
}

std::vector<std::size_t> ModelConfig::FrameCounts(std::size_t input_len) const {
  std::vector<std::size_t> counts;
  std::size_t len = input_len;
  for (std::size_t l = 0; l < kernel_sizes.size(); ++l) {
    len = ConvOutputLength(len, kernel_sizes[l], strides[l]);
    if (len == 0) {
      throw std::invalid_argument("input too short: " + std::to_string(input_len) +
                                  " samples, need at least " +
                                  std::to_string(MinInputLength()));
    }
    counts.push_back(len);
  }
  return counts;
}

std::size_t ModelConfig::MinInputLength() const {
  std::size_t len = 1;
  for (std::size_t l = kernel_sizes.size(); l-- > 0;) {
    len = (len - 1) * strides[l] + kernel_sizes[l];
  }
  return len;
}

bool operator==(const ModelConfig& a, const ModelConfig& b) {
  return a.conv_channels == b.conv_channels && a.kernel_sizes == b.kernel_sizes &&
         a.strides == b.strides && a.latent_dim == b.latent_dim &&
         a.regressor_hidden == b.regressor_hidden &&
         a.discriminator_hidden == b.discriminator_hidden &&
         a.groupnorm_groups == b.groupnorm_groups && a.task_mode == b.task_mode;
}

template <typename Real>
std::vector<NamedTensor<Real>> ModelParams<Real>::Named() {
  std::vector<NamedTensor<Real>> out;
  for (std::size_t i = 0; i < conv.size(); ++i) {
    const std::string idx = std::to_string(i);
    out.push_back({"encoder.conv" + idx + ".weight", &conv[i].weight});
    out.push_back({"encoder.conv" + idx + ".bias", &conv[i].bias});
    out.push_back({"encoder.norm" + idx + ".scale", &conv[i].norm_scale});
    out.push_back({"encoder.norm" + idx + ".shift", &conv[i].norm_shift});
  }
  out.push_back({"encoder.lstm.w_ih", &lstm.w_ih});
  out.push_back({"encoder.lstm.w_hh", &lstm.w_hh});
  out.push_back({"encoder.lstm.bias", &lstm.bias});
  for (std::size_t i = 0; i < regressor.size(); ++i) {
    const std::string idx = std::to_string(i);
    out.push_back({"regressor.fc" + idx + ".weight", &regressor[i].weight});
    out.push_back({"regressor.fc" + idx + ".bias", &regressor[i].bias});
  }
  for (std::size_t i = 0; i < discriminator.size(); ++i) {
    const std::string idx = std::to_string(i);
    out.push_back({"discriminator.fc" + idx + ".weight", &discriminator[i].weight});
    out.push_back({"discriminator.fc" + idx + ".bias", &discriminator[i].bias});
  }
  return out;
}

template <typename Real>
std::vector<ConstNamedTensor<Real>> ModelParams<Real>::Named() const {
  auto named = const_cast<ModelParams<Real>*>(this)->Named();
  std::vector<ConstNamedTensor<Real>> out;
  out.reserve(named.size());
  for (auto& n : named) out.push_back({std::move(n.name), n.tensor});
  return out;
}

template <typename Real>
std::size_t ModelParams<Real>::ParameterCount() const {
  std::size_t n = 0;
  for (const auto& t : Named()) n += t.tensor->size();
  return n;
}

ParamGroup GroupOf(std::string_view param_name) {
  if (param_name.starts_with("encoder.")) return ParamGroup::kEncoder;
  if (param_name.starts_with("regressor.")) return ParamGroup::kRegressor;
  if (param_name.starts_with("discriminator.")) return ParamGroup::kDiscriminator;
  throw std::invalid_argument("unknown parameter group for " + std::string(param_name));
}

namespace {

template <typename Real>
std::vector<LinearLayer<Real>> MakeMlp(std::size_t in, const std::vector<std::size_t>& hidden,
                                       std::size_t out) {
  std::vector<LinearLayer<Real>> layers;
  std::size_t width = in;
  auto add = [&](std::size_t next) {
    layers.push_back({Tensor<Real>({next, width}), Tensor<Real>({next})});
    width = next;
  };
  for (auto h : hidden) add(h);
  add(out);
  return layers;
}

template <typename Real>
ModelParams<Real> MakeZeroParams(const ModelConfig& config) {
  ModelParams<Real> p;
  std::size_t in_ch = 1;
  for (std::size_t l = 0; l < config.kernel_sizes.size(); ++l) {
    const std::size_t c = config.conv_channels;
    p.conv.push_back({Tensor<Real>({c, in_ch, config.kernel_sizes[l]}), Tensor<Real>({c}),
                      Tensor<Real>({c}, Real(1)), Tensor<Real>({c})});
    in_ch = c;
  }
  const std::size_t n = config.latent_dim;
  p.lstm.w_ih = Tensor<Real>({4 * n, config.conv_channels});
  p.lstm.w_hh = Tensor<Real>({4 * n, n});
  p.lstm.bias = Tensor<Real>({4 * n});
  p.regressor = MakeMlp<Real>(n, config.regressor_hidden, kRegressorOutputs);
  p.discriminator = MakeMlp<Real>(2 * n, config.discriminator_hidden, 1);
  return p;
}

template <typename Real>
void FillUniform(Tensor<Real>* t, double fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(fan_in);
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (auto& v : t->data) v = static_cast<Real>(dist(rng));
}

}  // namespace

template <typename Real>
ModelParams<Real> InitParams(const ModelConfig& config, Rng& rng) {
  config.Validate();
  ModelParams<Real> p = MakeZeroParams<Real>(config);
  for (auto& block : p.conv) {
    FillUniform(&block.weight, static_cast<double>(block.weight.shape[1] * block.weight.shape[2]),
                rng);
  }
  const double n = static_cast<double>(config.latent_dim);
  FillUniform(&p.lstm.w_ih, n, rng);
  FillUniform(&p.lstm.w_hh, n, rng);
  for (std::size_t k = 0; k < config.latent_dim; ++k) {
    p.lstm.bias[config.latent_dim + k] = Real(1);
  }
  for (auto* mlp : {&p.regressor, &p.discriminator}) {
    for (auto& layer : *mlp) {
      FillUniform(&layer.weight, static_cast<double>(layer.weight.shape[1]), rng);
    }
  }
  return p;
}

template <typename Real>
ModelParams<Real> ZerosLike(const ModelParams<Real>& params) {
  ModelParams<Real> z = params;
  for (auto& t : z.Named()) std::fill(t.tensor->data.begin(), t.tensor->data.end(), Real(0));
  return z;
}

template <typename To, typename From>
ModelParams<To> CastParams(const ModelParams<From>& params) {
  ModelParams<To> out;
  auto cast = [](const Tensor<From>& t) {
    Tensor<To> r(t.shape);
    for (std::size_t i = 0; i < t.size(); ++i) r[i] = static_cast<To>(t[i]);
    return r;
  };
  for (const auto& b : params.conv) {
    out.conv.push_back({cast(b.weight), cast(b.bias), cast(b.norm_scale), cast(b.norm_shift)});
  }
  out.lstm = {cast(params.lstm.w_ih), cast(params.lstm.w_hh), cast(params.lstm.bias)};
  for (const auto& l : params.regressor) out.regressor.push_back({cast(l.weight), cast(l.bias)});
  for (const auto& l : params.discriminator) {
    out.discriminator.push_back({cast(l.weight), cast(l.bias)});
  }
  return out;
}

template <typename Real>
void AddInto(ModelParams<Real>* dst, const ModelParams<Real>& src) {
  auto d = dst->Named();
  const auto s = src.Named();
  if (d.size() != s.size()) throw std::invalid_argument("parameter sets differ in size");
  for (std::size_t i = 0; i < d.size(); ++i) {
    d[i].tensor->AsVector() += s[i].tensor->AsVector();
  }
}

template <typename Real>
void CheckShapes(const ModelParams<Real>& params, const ModelConfig& config) {
  const auto expected = MakeZeroParams<Real>(config);
  const auto want = expected.Named();
  const auto have = params.Named();
  if (want.size() != have.size()) {
    throw std::invalid_argument("parameter count " + std::to_string(have.size()) +
                                " does not match config (" + std::to_string(want.size()) +
                                ")");
  }
  for (std::size_t i = 0; i < want.size(); ++i) {
    if (want[i].tensor->shape != have[i].tensor->shape) {
      throw std::invalid_argument("shape mismatch for " + want[i].name + ": expected " +
                                  ShapeString(want[i].tensor->shape) + ", got " +
                                  ShapeString(have[i].tensor->shape));
    }
  }
}

template <typename Real>
Vector<Real> EncodeWaveform(const ModelParams<Real>& params, const ModelConfig& config,
                            std::span<const float> samples, EncoderCache<Real>* cache,
                            ReluTrace* trace) {
  config.FrameCounts(samples.size());  // length check
  Matrix<Real> x(1, static_cast<Eigen::Index>(samples.size()));
  for (std::size_t i = 0; i < samples.size(); ++i) {
    x(0, static_cast<Eigen::Index>(i)) = static_cast<Real>(samples[i]);
  }
  if (cache) cache->conv.resize(params.conv.size());
  Matrix<Real> xhat;
  std::vector<Real> inv_std;
  for (std::size_t l = 0; l < params.conv.size(); ++l) {
    const auto& block = params.conv[l];
    Matrix<Real> pre = Conv1dForward(block.weight, block.bias, x, config.strides[l]);
    Matrix<Real> y = GroupNormForward(pre, config.groupnorm_groups, block.norm_scale,
                                      block.norm_shift, &xhat, &inv_std);
    if (trace) trace->Observe(y.data(), static_cast<std::size_t>(y.size()));
    Matrix<Real> act = y.cwiseMax(Real(0));
    if (cache) {
      auto& c = cache->conv[l];
      c.input = std::move(x);
      c.xhat = std::move(xhat);
      c.affine = std::move(y);
      c.inv_std = std::move(inv_std);
    }
    x = std::move(act);
  }
  const Matrix<Real> frames = x.transpose();
  return LstmForward(params.lstm.w_ih, params.lstm.w_hh, params.lstm.bias, frames,
                     cache ? &cache->lstm : nullptr);
}

template <typename Real>
Matrix<Real> EncoderForward(const ModelParams<Real>& params, const ModelConfig& config,
                            const std::vector<std::vector<float>>& batch, int threads) {
  Matrix<Real> z(static_cast<Eigen::Index>(batch.size()),
                 static_cast<Eigen::Index>(config.latent_dim));
  ParallelFor(batch.size(), threads, [&](std::size_t b) {
    z.row(static_cast<Eigen::Index>(b)) =
        EncodeWaveform<Real>(params, config, batch[b]).transpose();
  });
  return z;
}

template <typename Real>
void EncoderBackward(const ModelParams<Real>& params, const ModelConfig& config,
                     const EncoderCache<Real>& cache, const Vector<Real>& d_latent,
                     ModelParams<Real>* grads) {
  Matrix<Real> d_frames;
  LstmBackward(params.lstm.w_ih, params.lstm.w_hh, cache.lstm, d_latent, &grads->lstm.w_ih,
               &grads->lstm.w_hh, &grads->lstm.bias, &d_frames);
  Matrix<Real> d_act = d_frames.transpose();
  Matrix<Real> d_pre, d_input;
  for (std::size_t l = params.conv.size(); l-- > 0;) {
    const auto& c = cache.conv[l];
    auto& g = grads->conv[l];
    const Matrix<Real> d_affine = (c.affine.array() > Real(0)).select(d_act.array(), Real(0));
    GroupNormBackward(c.xhat, c.inv_std, config.groupnorm_groups, params.conv[l].norm_scale,
                      d_affine, &d_pre, &g.norm_scale, &g.norm_shift);
    Conv1dBackward(params.conv[l].weight, c.input, config.strides[l], d_pre, &g.weight,
                   &g.bias, l == 0 ? nullptr : &d_input);
    if (l > 0) d_act = std::move(d_input);
  }
}

template <typename Real>
Matrix<Real> RegressorForward(const ModelParams<Real>& params, const Matrix<Real>& latent,
                              MlpCache<Real>* cache, ReluTrace* trace) {
  return MlpForward(params.regressor, latent, cache, trace);
}

template <typename Real>
std::vector<ProfilePrediction<Real>> ToPredictions(const Matrix<Real>& outputs) {
  if (outputs.cols() != static_cast<Eigen::Index>(kRegressorOutputs)) {
    throw std::invalid_argument("regressor output must have 3 columns");
  }
  std::vector<ProfilePrediction<Real>> preds(static_cast<std::size_t>(outputs.rows()));
  for (Eigen::Index i = 0; i < outputs.rows(); ++i) {
    preds[static_cast<std::size_t>(i)] = {outputs(i, 0), outputs(i, 1), outputs(i, 2)};
  }
  return preds;
}

template <typename Real>
Vector<Real> DiscriminatorForward(const ModelParams<Real>& params, const Matrix<Real>& first,
                                  const Matrix<Real>& second, MlpCache<Real>* cache,
                                  ReluTrace* trace) {
  if (first.rows() != second.rows() || first.cols() != second.cols()) {
    throw std::invalid_argument("discriminator inputs differ in shape");
  }
  Matrix<Real> pairs(first.rows(), first.cols() + second.cols());
  pairs << first, second;
  return MlpForward(params.discriminator, pairs, cache, trace).col(0);
}

#define SSLPROF_INSTANTIATE_MODEL(Real)                                                   \
  template struct ModelParams<Real>;                                                      \
  template ModelParams<Real> InitParams<Real>(const ModelConfig&, Rng&);                  \
  template ModelParams<Real> ZerosLike(const ModelParams<Real>&);                         \
  template void AddInto(ModelParams<Real>*, const ModelParams<Real>&);                    \
  template void CheckShapes(const ModelParams<Real>&, const ModelConfig&);                \
  template Vector<Real> EncodeWaveform(const ModelParams<Real>&, const ModelConfig&,      \
                                       std::span<const float>, EncoderCache<Real>*,       \
                                       ReluTrace*);                                       \
  template Matrix<Real> EncoderForward(const ModelParams<Real>&, const ModelConfig&,      \
                                       const std::vector<std::vector<float>>&, int);      \
  template void EncoderBackward(const ModelParams<Real>&, const ModelConfig&,             \
                                const EncoderCache<Real>&, const Vector<Real>&,           \
                                ModelParams<Real>*);                                      \
  template Matrix<Real> RegressorForward(const ModelParams<Real>&, const Matrix<Real>&,   \
                                         MlpCache<Real>*, ReluTrace*);                    \
  template std::vector<ProfilePrediction<Real>> ToPredictions(const Matrix<Real>&);      \
  template Vector<Real> DiscriminatorForward(const ModelParams<Real>&,                    \
                                             const Matrix<Real>&, const Matrix<Real>&,    \
                                             MlpCache<Real>*, ReluTrace*);

SSLPROF_INSTANTIATE_MODEL(float)
SSLPROF_INSTANTIATE_MODEL(double)

#undef SSLPROF_INSTANTIATE_MODEL

template ModelParams<double> CastParams<double, float>(const ModelParams<float>&);
template ModelParams<float> CastParams<float, double>(const ModelParams<double>&);
template ModelParams<float> CastParams<float, float>(const ModelParams<float>&);
template ModelParams<double> CastParams<double, double>(const ModelParams<double>&);

}  // namespace sslprof
