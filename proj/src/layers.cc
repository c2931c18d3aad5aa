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

#include "sslprof/layers.h"

#include <cmath>
#include <stdexcept>
#include <string>

namespace sslprof {

namespace {

template <typename Real>
Real Sigmoid(Real x) {
  return Real(1) / (Real(1) + std::exp(-x));
}

template <typename Real>
Matrix<Real> Im2Col(const Matrix<Real>& input, std::size_t kernel, std::size_t stride,
                    std::size_t frames) {
  const auto in_ch = static_cast<std::size_t>(input.rows());
  Matrix<Real> col(static_cast<Eigen::Index>(in_ch * kernel),
                   static_cast<Eigen::Index>(frames));
  for (std::size_t i = 0; i < in_ch; ++i) {
    const Real* src = input.data() + i * static_cast<std::size_t>(input.cols());
    for (std::size_t j = 0; j < kernel; ++j) {
      Real* dst = col.data() + (i * kernel + j) * frames;
      for (std::size_t t = 0; t < frames; ++t) dst[t] = src[t * stride + j];
    }
  }
  return col;
}

}  // namespace

std::size_t ConvOutputLength(std::size_t input_len, std::size_t kernel,
                             std::size_t stride) {
  if (input_len < kernel) return 0;
  return (input_len - kernel) / stride + 1;
}

template <typename Real>
Matrix<Real> Conv1dForward(const Tensor<Real>& weight, const Tensor<Real>& bias,
                           const Matrix<Real>& input, std::size_t stride) {
  if (weight.rank() != 3 || weight.shape[1] != static_cast<std::size_t>(input.rows())) {
    throw std::invalid_argument("conv weight " + ShapeString(weight.shape) +
                                " does not match input channels " +
                                std::to_string(input.rows()));
  }
  const std::size_t kernel = weight.shape[2];
  const std::size_t frames =
      ConvOutputLength(static_cast<std::size_t>(input.cols()), kernel, stride);
  if (frames == 0) throw std::invalid_argument("input too short for convolution");
  const Matrix<Real> col = Im2Col(input, kernel, stride, frames);
  Matrix<Real> out = weight.AsMatrix() * col;
  out.colwise() += bias.AsVector();
  return out;
}

template <typename Real>
void Conv1dBackward(const Tensor<Real>& weight, const Matrix<Real>& input,
                    std::size_t stride, const Matrix<Real>& d_out,
                    Tensor<Real>* d_weight, Tensor<Real>* d_bias,
                    Matrix<Real>* d_input) {
  const std::size_t kernel = weight.shape[2];
  const auto frames = static_cast<std::size_t>(d_out.cols());
  const Matrix<Real> col = Im2Col(input, kernel, stride, frames);
  d_weight->AsMatrix().noalias() += d_out * col.transpose();
  d_bias->AsVector() += d_out.rowwise().sum().transpose();
  if (d_input == nullptr) return;
  const Matrix<Real> d_col = weight.AsMatrix().transpose() * d_out;
  d_input->setZero(input.rows(), input.cols());
  const std::size_t in_ch = static_cast<std::size_t>(input.rows());
  for (std::size_t i = 0; i < in_ch; ++i) {
    Real* dst = d_input->data() + i * static_cast<std::size_t>(input.cols());
    for (std::size_t j = 0; j < kernel; ++j) {
      const Real* src = d_col.data() + (i * kernel + j) * frames;
      for (std::size_t t = 0; t < frames; ++t) dst[t * stride + j] += src[t];
    }
  }
}

template <typename Real>
Matrix<Real> GroupNormForward(const Matrix<Real>& x, std::size_t groups,
                              const Tensor<Real>& scale, const Tensor<Real>& shift,
                              Matrix<Real>* xhat, std::vector<Real>* inv_std) {
  const auto channels = static_cast<std::size_t>(x.rows());
  const auto frames = static_cast<std::size_t>(x.cols());
  if (groups == 0 || channels % groups != 0) {
    throw std::invalid_argument("group count must divide the channel count");
  }
  const std::size_t per_group = channels / groups;
  const Real count = static_cast<Real>(per_group * frames);
  xhat->resize(x.rows(), x.cols());
  inv_std->assign(groups, Real(0));
  Matrix<Real> y(x.rows(), x.cols());
  for (std::size_t g = 0; g < groups; ++g) {
    const auto rows = x.middleRows(static_cast<Eigen::Index>(g * per_group),
                                   static_cast<Eigen::Index>(per_group));
    const Real mean = rows.sum() / count;
    const Real var = (rows.array() - mean).square().sum() / count;
    const Real inv = Real(1) / std::sqrt(var + static_cast<Real>(kGroupNormEpsilon));
    (*inv_std)[g] = inv;
    xhat->middleRows(static_cast<Eigen::Index>(g * per_group),
                     static_cast<Eigen::Index>(per_group)) =
        (rows.array() - mean) * inv;
  }
  for (std::size_t c = 0; c < channels; ++c) {
    const auto r = static_cast<Eigen::Index>(c);
    y.row(r) = (xhat->row(r).array() * scale[c] + shift[c]).matrix();
  }
  (void)frames;
  return y;
}

template <typename Real>
void GroupNormBackward(const Matrix<Real>& xhat, const std::vector<Real>& inv_std,
                       std::size_t groups, const Tensor<Real>& scale,
                       const Matrix<Real>& d_out, Matrix<Real>* d_input,
                       Tensor<Real>* d_scale, Tensor<Real>* d_shift) {
  const auto channels = static_cast<std::size_t>(xhat.rows());
  const std::size_t per_group = channels / groups;
  const Real count = static_cast<Real>(per_group * static_cast<std::size_t>(xhat.cols()));
  Matrix<Real> d_xhat(xhat.rows(), xhat.cols());
  for (std::size_t c = 0; c < channels; ++c) {
    const auto r = static_cast<Eigen::Index>(c);
    (*d_scale)[c] += (d_out.row(r).array() * xhat.row(r).array()).sum();
    (*d_shift)[c] += d_out.row(r).sum();
    d_xhat.row(r) = d_out.row(r) * scale[c];
  }
  d_input->resize(xhat.rows(), xhat.cols());
  for (std::size_t g = 0; g < groups; ++g) {
    const auto first = static_cast<Eigen::Index>(g * per_group);
    const auto n = static_cast<Eigen::Index>(per_group);
    const auto dx = d_xhat.middleRows(first, n).array();
    const auto xh = xhat.middleRows(first, n).array();
    const Real mean_d = dx.sum() / count;
    const Real mean_dx = (dx * xh).sum() / count;
    d_input->middleRows(first, n) = ((dx - mean_d - xh * mean_dx) * inv_std[g]).matrix();
  }
}

template <typename Real>
Vector<Real> LstmForward(const Tensor<Real>& w_ih, const Tensor<Real>& w_hh,
                         const Tensor<Real>& bias, const Matrix<Real>& x,
                         LstmCache<Real>* cache) {
  const auto hidden = static_cast<Eigen::Index>(w_hh.shape[1]);
  if (w_ih.shape[0] != static_cast<std::size_t>(4 * hidden) ||
      w_ih.shape[1] != static_cast<std::size_t>(x.cols())) {
    throw std::invalid_argument("LSTM input width " + std::to_string(x.cols()) +
                                " does not match w_ih " + ShapeString(w_ih.shape));
  }
  const Eigen::Index steps = x.rows();
  if (steps == 0) throw std::invalid_argument("LSTM needs at least one timestep");
  const auto w_hh_m = w_hh.AsMatrix();

  Matrix<Real> pre = x * w_ih.AsMatrix().transpose();
  pre.rowwise() += bias.AsVector().transpose();

  Vector<Real> h = Vector<Real>::Zero(hidden);
  Vector<Real> c = Vector<Real>::Zero(hidden);
  Vector<Real> a(4 * hidden);
  if (cache) {
    cache->input = x;
    cache->gates.resize(steps, 4 * hidden);
    cache->cell.setZero(steps + 1, hidden);
    cache->hidden.setZero(steps + 1, hidden);
  }
  for (Eigen::Index t = 0; t < steps; ++t) {
    a.noalias() = w_hh_m * h;
    a += pre.row(t).transpose();
    for (Eigen::Index k = 0; k < hidden; ++k) {
      const Real ig = Sigmoid(a[k]);
      const Real fg = Sigmoid(a[hidden + k]);
      const Real gg = std::tanh(a[2 * hidden + k]);
      const Real og = Sigmoid(a[3 * hidden + k]);
      c[k] = fg * c[k] + ig * gg;
      h[k] = og * std::tanh(c[k]);
      a[k] = ig;
      a[hidden + k] = fg;
      a[2 * hidden + k] = gg;
      a[3 * hidden + k] = og;
    }
    if (cache) {
      cache->gates.row(t) = a.transpose();
      cache->cell.row(t + 1) = c.transpose();
      cache->hidden.row(t + 1) = h.transpose();
    }
  }
  return h;
}

template <typename Real>
void LstmBackward(const Tensor<Real>& w_ih, const Tensor<Real>& w_hh,
                  const LstmCache<Real>& cache, const Vector<Real>& d_final_hidden,
                  Tensor<Real>* d_w_ih, Tensor<Real>* d_w_hh, Tensor<Real>* d_bias,
                  Matrix<Real>* d_input) {
  const auto hidden = static_cast<Eigen::Index>(w_hh.shape[1]);
  const Eigen::Index steps = cache.gates.rows();
  const auto w_hh_m = w_hh.AsMatrix();
  Matrix<Real> d_gates(steps, 4 * hidden);
  Vector<Real> dh = d_final_hidden;
  Vector<Real> dc = Vector<Real>::Zero(hidden);
  Vector<Real> dg(4 * hidden);
  for (Eigen::Index t = steps - 1; t >= 0; --t) {
    for (Eigen::Index k = 0; k < hidden; ++k) {
      const Real ig = cache.gates(t, k);
      const Real fg = cache.gates(t, hidden + k);
      const Real gg = cache.gates(t, 2 * hidden + k);
      const Real og = cache.gates(t, 3 * hidden + k);
      const Real tc = std::tanh(cache.cell(t + 1, k));
      const Real c_prev = cache.cell(t, k);
      const Real dck = dc[k] + dh[k] * og * (Real(1) - tc * tc);
      dg[k] = dck * gg * ig * (Real(1) - ig);
      dg[hidden + k] = dck * c_prev * fg * (Real(1) - fg);
      dg[2 * hidden + k] = dck * ig * (Real(1) - gg * gg);
      dg[3 * hidden + k] = dh[k] * tc * og * (Real(1) - og);
      dc[k] = dck * fg;
    }
    d_gates.row(t) = dg.transpose();
    dh.noalias() = w_hh_m.transpose() * dg;
  }
  d_w_ih->AsMatrix().noalias() += d_gates.transpose() * cache.input;
  d_w_hh->AsMatrix().noalias() += d_gates.transpose() * cache.hidden.topRows(steps);
  d_bias->AsVector() += d_gates.colwise().sum().transpose();
  if (d_input) d_input->noalias() = d_gates * w_ih.AsMatrix();
}

template <typename Real>
Matrix<Real> MlpForward(const std::vector<LinearLayer<Real>>& layers,
                        const Matrix<Real>& x, MlpCache<Real>* cache,
                        ReluTrace* trace) {
  if (cache) {
    cache->inputs.clear();
    cache->pre_activations.clear();
  }
  Matrix<Real> act = x;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& layer = layers[l];
    if (layer.weight.shape[1] != static_cast<std::size_t>(act.cols())) {
      throw std::invalid_argument("MLP layer " + std::to_string(l) + " expects width " +
                                  std::to_string(layer.weight.shape[1]) + ", got " +
                                  std::to_string(act.cols()));
    }
    Matrix<Real> y = act * layer.weight.AsMatrix().transpose();
    y.rowwise() += layer.bias.AsVector().transpose();
    if (cache) cache->inputs.push_back(std::move(act));
    if (l + 1 == layers.size()) return y;
    if (trace) trace->Observe(y.data(), static_cast<std::size_t>(y.size()));
    act = y.cwiseMax(Real(0));
    if (cache) cache->pre_activations.push_back(std::move(y));
  }
  return act;
}

template <typename Real>
void MlpBackward(const std::vector<LinearLayer<Real>>& layers,
                 const MlpCache<Real>& cache, const Matrix<Real>& d_out,
                 std::vector<LinearLayer<Real>>* grads, Matrix<Real>* d_input) {
  Matrix<Real> dy = d_out;
  for (std::size_t l = layers.size(); l-- > 0;) {
    auto& g = (*grads)[l];
    g.weight.AsMatrix().noalias() += dy.transpose() * cache.inputs[l];
    g.bias.AsVector() += dy.colwise().sum().transpose();
    if (l == 0 && d_input == nullptr) break;
    Matrix<Real> dx = dy * layers[l].weight.AsMatrix();
    if (l == 0) {
      *d_input = std::move(dx);
      break;
    }
    const auto& pre = cache.pre_activations[l - 1];
    dy = (pre.array() > Real(0)).select(dx, Real(0));
  }
}

#define SSLPROF_INSTANTIATE_LAYERS(Real)                                                 \
  template Matrix<Real> Conv1dForward(const Tensor<Real>&, const Tensor<Real>&,          \
                                      const Matrix<Real>&, std::size_t);                 \
  template void Conv1dBackward(const Tensor<Real>&, const Matrix<Real>&, std::size_t,    \
                               const Matrix<Real>&, Tensor<Real>*, Tensor<Real>*,        \
                               Matrix<Real>*);                                           \
  template Matrix<Real> GroupNormForward(const Matrix<Real>&, std::size_t,               \
                                         const Tensor<Real>&, const Tensor<Real>&,       \
                                         Matrix<Real>*, std::vector<Real>*);             \
  template void GroupNormBackward(const Matrix<Real>&, const std::vector<Real>&,         \
                                  std::size_t, const Tensor<Real>&, const Matrix<Real>&, \
                                  Matrix<Real>*, Tensor<Real>*, Tensor<Real>*);          \
  template Vector<Real> LstmForward(const Tensor<Real>&, const Tensor<Real>&,            \
                                    const Tensor<Real>&, const Matrix<Real>&,            \
                                    LstmCache<Real>*);                                   \
  template void LstmBackward(const Tensor<Real>&, const Tensor<Real>&,                   \
                             const LstmCache<Real>&, const Vector<Real>&, Tensor<Real>*, \
                             Tensor<Real>*, Tensor<Real>*, Matrix<Real>*);               \
  template Matrix<Real> MlpForward(const std::vector<LinearLayer<Real>>&,                \
                                   const Matrix<Real>&, MlpCache<Real>*, ReluTrace*);    \
  template void MlpBackward(const std::vector<LinearLayer<Real>>&, const MlpCache<Real>&, \
                            const Matrix<Real>&, std::vector<LinearLayer<Real>>*,        \
                            Matrix<Real>*);

SSLPROF_INSTANTIATE_LAYERS(float)
SSLPROF_INSTANTIATE_LAYERS(double)

#undef SSLPROF_INSTANTIATE_LAYERS

}  // namespace sslprof
