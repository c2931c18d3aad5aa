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

#include "sslprof/gradients.h"

#include <stdexcept>

#include "sslprof/parallel.h"

namespace sslprof {

namespace {

struct Plan {
  bool supervised = false;
  bool representation = false;
  bool consistency = false;
};

Plan MakePlan(const LossGraph& graph) {
  Plan plan;
  plan.supervised = graph.supervised != nullptr && !graph.supervised->waveforms.empty();
  const bool have_triplets = graph.triplets != nullptr && graph.triplets->size() > 0;
  plan.representation = have_triplets && graph.paths.representation;
  plan.consistency = have_triplets && graph.paths.consistency;
  if (!plan.supervised && !plan.representation && !plan.consistency &&
      graph.param_l2 == 0.0) {
    throw std::invalid_argument("loss graph has no terms, so there is no scalar loss");
  }
  if (plan.supervised &&
      graph.supervised->waveforms.size() != graph.supervised->targets.size()) {
    throw std::invalid_argument("supervised waveforms and targets differ in count");
  }
  if (have_triplets && (graph.triplets->positives.size() != graph.triplets->size() ||
                        graph.triplets->negatives.size() != graph.triplets->size())) {
    throw std::invalid_argument("triplet columns differ in length");
  }
  return plan;
}

std::size_t CacheBytes(const ModelConfig& config, std::size_t len, std::size_t scalar) {
  const auto frames = config.FrameCounts(len);
  std::size_t elems = len;
  for (std::size_t l = 0; l < frames.size(); ++l) {
    elems += 3 * config.conv_channels * frames[l];
  }
  elems += frames.back() * (config.conv_channels + 6 * config.latent_dim);
  return elems * scalar;
}

template <typename Real>
Matrix<Real> PredictionsToMatrix(const std::vector<ProfilePrediction<Real>>& preds) {
  Matrix<Real> m(static_cast<Eigen::Index>(preds.size()), 3);
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    m(r, 0) = preds[i].height;
    m(r, 1) = preds[i].age;
    m(r, 2) = preds[i].gender_logit;
  }
  return m;
}

template <typename Real>
Matrix<Real> ColumnMatrix(const std::vector<Real>& v) {
  Matrix<Real> m(static_cast<Eigen::Index>(v.size()), 1);
  for (std::size_t i = 0; i < v.size(); ++i) m(static_cast<Eigen::Index>(i), 0) = v[i];
  return m;
}

template <typename Real>
std::vector<Real> ToStd(const Vector<Real>& v) {
  return std::vector<Real>(v.data(), v.data() + v.size());
}

template <typename Real>
GradientResult<Real> RunGraph(const ModelParams<Real>& params, const ModelConfig& config,
                              const LossGraph& graph, const ExecOptions& exec,
                              bool want_grads, ReluTrace* trace) {
  const Plan plan = MakePlan(graph);
  const TaskMode mode = config.task_mode;
  const auto n = static_cast<Eigen::Index>(config.latent_dim);

  // Encoded waveforms, in order: supervised, anchors, positives, negatives.
  std::vector<const std::vector<float>*> waves;
  const std::size_t n_sup = plan.supervised ? graph.supervised->waveforms.size() : 0;
  const std::size_t n_trip =
      (plan.representation || plan.consistency) ? graph.triplets->size() : 0;
  const std::size_t n_neg = plan.representation ? n_trip : 0;
  if (plan.supervised) {
    for (const auto& w : graph.supervised->waveforms) waves.push_back(&w);
  }
  if (n_trip > 0) {
    for (const auto& w : graph.triplets->anchors) waves.push_back(&w);
    for (const auto& w : graph.triplets->positives) waves.push_back(&w);
  }
  if (n_neg > 0) {
    for (const auto& w : graph.triplets->negatives) waves.push_back(&w);
  }
  const auto sup_at = Eigen::Index{0};
  const auto anc_at = static_cast<Eigen::Index>(n_sup);
  const auto pos_at = anc_at + static_cast<Eigen::Index>(n_trip);
  const auto neg_at = pos_at + static_cast<Eigen::Index>(n_trip);
  const auto n_sup_i = static_cast<Eigen::Index>(n_sup);
  const auto n_trip_i = static_cast<Eigen::Index>(n_trip);

  std::size_t cache_bytes = 0;
  for (const auto* w : waves) cache_bytes += CacheBytes(config, w->size(), sizeof(Real));
  const bool keep_caches = want_grads && cache_bytes <= exec.activation_budget_bytes;

  Matrix<Real> z(static_cast<Eigen::Index>(waves.size()), n);
  std::vector<EncoderCache<Real>> caches(keep_caches ? waves.size() : 0);
  std::vector<ReluTrace> traces(trace ? waves.size() : 0);
  ParallelFor(waves.size(), exec.threads, [&](std::size_t i) {
    z.row(static_cast<Eigen::Index>(i)) =
        EncodeWaveform<Real>(params, config, *waves[i], keep_caches ? &caches[i] : nullptr,
                             trace ? &traces[i] : nullptr)
            .transpose();
  });
  for (const auto& t : traces) trace->Absorb(t);

  GradientResult<Real> result;
  Matrix<Real> d_z;
  if (want_grads) {
    result.grads = ZerosLike(params);
    d_z.setZero(z.rows(), z.cols());
  }

  double l_p = 0.0, l_repr = 0.0, l_c = 0.0;

  if (plan.supervised) {
    MlpCache<Real> cache;
    const Matrix<Real> out = RegressorForward(params, Matrix<Real>(z.middleRows(sup_at, n_sup_i)),
                                              &cache, trace);
    const auto preds = ToPredictions(out);
    std::vector<ProfilePrediction<Real>> d_pred;
    l_p = static_cast<double>(SupervisedProfileLoss<Real>(
        preds, graph.supervised->targets, graph.weights, mode, want_grads ? &d_pred : nullptr));
    if (want_grads) {
      Matrix<Real> d_in;
      MlpBackward(params.regressor, cache, PredictionsToMatrix(d_pred),
                  &result.grads.regressor, &d_in);
      d_z.middleRows(sup_at, n_sup_i) += d_in;
    }
  }

  if (plan.representation) {
    const Real w = static_cast<Real>(graph.paths.representation_weight);
    const Matrix<Real> za = z.middleRows(anc_at, n_trip_i);
    const Matrix<Real> zp = z.middleRows(pos_at, n_trip_i);
    const Matrix<Real> zn = z.middleRows(neg_at, n_trip_i);
    MlpCache<Real> pos_cache, neg_cache;
    const auto pos = ToStd<Real>(DiscriminatorForward(params, za, zp, &pos_cache, trace));
    const auto neg = ToStd<Real>(DiscriminatorForward(params, za, zn, &neg_cache, trace));
    std::vector<Real> d_pos, d_neg;
    const Real raw = RepresentationLoss<Real>(pos, neg, want_grads ? &d_pos : nullptr,
                                              want_grads ? &d_neg : nullptr);
    l_repr = static_cast<double>(w * raw);
    if (want_grads) {
      for (auto& d : d_pos) d *= w;
      for (auto& d : d_neg) d *= w;
      Matrix<Real> d_pair;
      MlpBackward(params.discriminator, pos_cache, ColumnMatrix(d_pos),
                  &result.grads.discriminator, &d_pair);
      d_z.middleRows(anc_at, n_trip_i) += d_pair.leftCols(n);
      d_z.middleRows(pos_at, n_trip_i) += d_pair.rightCols(n);
      MlpBackward(params.discriminator, neg_cache, ColumnMatrix(d_neg),
                  &result.grads.discriminator, &d_pair);
      d_z.middleRows(anc_at, n_trip_i) += d_pair.leftCols(n);
      d_z.middleRows(neg_at, n_trip_i) += d_pair.rightCols(n);
    }
  }

  if (plan.consistency) {
    const Real w = static_cast<Real>(graph.paths.consistency_weight);
    MlpCache<Real> anc_cache, pos_cache;
    const auto anc = ToPredictions(RegressorForward(
        params, Matrix<Real>(z.middleRows(anc_at, n_trip_i)), &anc_cache, trace));
    std::vector<ProfilePrediction<Real>> pos;
    if constexpr (std::is_same_v<Real, double>) {
      if (graph.consistency_reference != nullptr) {
        const auto& ref = *graph.consistency_reference;
        pos = ToPredictions(RegressorForward(
            ref, EncoderForward(ref, config, graph.triplets->positives, exec.threads)));
      }
    }
    if (pos.empty()) {
      pos = ToPredictions(RegressorForward(
          params, Matrix<Real>(z.middleRows(pos_at, n_trip_i)), &pos_cache, trace));
    }
    const bool symmetric = graph.paths.consistency_gradient == ConsistencyGradient::kSymmetric;
    std::vector<ProfilePrediction<Real>> d_anc, d_pos;
    const Real raw = ConsistencyLoss<Real>(anc, pos, graph.weights, mode,
                                           graph.paths.consistency_gradient,
                                           want_grads ? &d_anc : nullptr,
                                           want_grads && symmetric ? &d_pos : nullptr);
    l_c = static_cast<double>(w * raw);
    if (want_grads) {
      Matrix<Real> d_in;
      MlpBackward(params.regressor, anc_cache, Matrix<Real>(PredictionsToMatrix(d_anc) * w),
                  &result.grads.regressor, &d_in);
      d_z.middleRows(anc_at, n_trip_i) += d_in;
      if (symmetric) {
        MlpBackward(params.regressor, pos_cache, Matrix<Real>(PredictionsToMatrix(d_pos) * w),
                    &result.grads.regressor, &d_in);
        d_z.middleRows(pos_at, n_trip_i) += d_in;
      }
    }
  }

  result.paths = TotalLoss(l_p, l_repr, l_c);
  result.value = result.paths.total;
  if (graph.param_l2 != 0.0) {
    double sq = 0.0;
    for (const auto& t : params.Named()) {
      sq += static_cast<double>(t.tensor->AsVector().squaredNorm());
    }
    result.value += graph.param_l2 * sq;
    if (want_grads) {
      auto g = result.grads.Named();
      const auto p = params.Named();
      const Real k = static_cast<Real>(2.0 * graph.param_l2);
      for (std::size_t i = 0; i < g.size(); ++i) {
        g[i].tensor->AsVector() += k * p[i].tensor->AsVector();
      }
    }
  }
  if (!want_grads) return result;

  // Encoder backward. Rows with an all-zero upstream gradient contribute
  // nothing and are skipped before chunking, so zero-weighted rows leave the
  // summation order of the remaining rows unchanged.
  std::vector<std::size_t> active;
  for (std::size_t i = 0; i < waves.size(); ++i) {
    if (!d_z.row(static_cast<Eigen::Index>(i)).isZero(0)) active.push_back(i);
  }
  const std::size_t chunks = std::min(kGradientChunks, active.size());
  std::vector<ModelParams<Real>> chunk_grads(chunks);
  ParallelFor(chunks, exec.threads, [&](std::size_t k) {
    const std::size_t begin = active.size() * k / chunks;
    const std::size_t end = active.size() * (k + 1) / chunks;
    chunk_grads[k] = ZerosLike(params);
    for (std::size_t j = begin; j < end; ++j) {
      const std::size_t i = active[j];
      const Vector<Real> dz = d_z.row(static_cast<Eigen::Index>(i)).transpose();
      if (keep_caches) {
        EncoderBackward(params, config, caches[i], dz, &chunk_grads[k]);
      } else {
        EncoderCache<Real> cache;
        EncodeWaveform<Real>(params, config, *waves[i], &cache);
        EncoderBackward(params, config, cache, dz, &chunk_grads[k]);
      }
    }
  });
  for (const auto& g : chunk_grads) AddInto(&result.grads, g);

  result.latent.supervised = d_z.middleRows(sup_at, n_sup_i);
  result.latent.anchor = d_z.middleRows(anc_at, n_trip_i);
  result.latent.positive = d_z.middleRows(pos_at, n_trip_i);
  result.latent.negative = d_z.middleRows(neg_at, static_cast<Eigen::Index>(n_neg));
  return result;
}

}  // namespace

template <typename Real>
GradientResult<Real> ParameterGradients(const ModelParams<Real>& params,
                                        const ModelConfig& config, const LossGraph& graph,
                                        const ExecOptions& exec) {
  return RunGraph(params, config, graph, exec, true, nullptr);
}

template <typename Real>
double EvaluateLoss(const ModelParams<Real>& params, const ModelConfig& config,
                    const LossGraph& graph, ReluTrace* trace, LossBreakdown* paths,
                    const ExecOptions& exec) {
  auto r = RunGraph(params, config, graph, exec, false, trace);
  if (paths) *paths = r.paths;
  return r.value;
}

template GradientResult<float> ParameterGradients(const ModelParams<float>&,
                                                  const ModelConfig&, const LossGraph&,
                                                  const ExecOptions&);
template GradientResult<double> ParameterGradients(const ModelParams<double>&,
                                                   const ModelConfig&, const LossGraph&,
                                                   const ExecOptions&);
template double EvaluateLoss(const ModelParams<float>&, const ModelConfig&, const LossGraph&,
                             ReluTrace*, LossBreakdown*, const ExecOptions&);
template double EvaluateLoss(const ModelParams<double>&, const ModelConfig&, const LossGraph&,
                             ReluTrace*, LossBreakdown*, const ExecOptions&);

}  // namespace sslprof
