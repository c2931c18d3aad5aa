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

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "sslprof/layers.h"
#include "sslprof/model.h"
#include "support/oracles.h"

namespace sslprof {
namespace {

std::vector<double> Flat(const Tensor<double>& t) { return {t.data.begin(), t.data.end()}; }

using Mat = Matrix<double>;

void FillRandom(Tensor<double>* t, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  for (auto& x : t->data) x = n(rng);
}

Mat RandomMatrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Mat m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

oracle::Grid ToGrid(const Mat& m) {
  oracle::Grid g(m.rows(), std::vector<double>(m.cols()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) g[r][c] = m(r, c);
  }
  return g;
}

double MaxDiff(const Mat& m, const oracle::Grid& g) {
  REQUIRE(static_cast<std::size_t>(m.rows()) == g.size());
  double worst = 0.0;
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    REQUIRE(static_cast<std::size_t>(m.cols()) == g[r].size());
    for (Eigen::Index c = 0; c < m.cols(); ++c) worst = std::max(worst, std::abs(m(r, c) - g[r][c]));
  }
  return worst;
}

std::vector<oracle::Dense> ToDense(const std::vector<LinearLayer<double>>& layers) {
  std::vector<oracle::Dense> out;
  for (const auto& l : layers) out.push_back({Flat(l.weight), Flat(l.bias), l.weight.shape[1], l.weight.shape[0]});
  return out;
}

TEST_CASE("conv output length matches a sliding-window count") {
  for (std::size_t k = 1; k <= 10; ++k) {
    for (std::size_t s = 1; s <= 5; ++s) {
      for (std::size_t len = k; len < 60; ++len) {
        std::size_t windows = 0;
        for (std::size_t start = 0; start + k <= len; start += s) ++windows;
        REQUIRE(ConvOutputLength(len, k, s) == windows);
      }
    }
  }
}

TEST_CASE("conv forward matches the direct loop") {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<std::size_t> dim(1, 6), ks(1, 10), ss(1, 5);
  for (int trial = 0; trial < 25; ++trial) {
    const std::size_t in = dim(rng), out = dim(rng), k = ks(rng), s = ss(rng);
    const std::size_t len = k + dim(rng) * 7;
    Tensor<double> w({out, in, k}), b({out});
    FillRandom(&w, rng);
    FillRandom(&b, rng);
    const Mat x = RandomMatrix(in, len, rng);
    const Mat y = Conv1dForward(w, b, x, s);
    CHECK(MaxDiff(y, oracle::Conv1d(Flat(w), Flat(b), ToGrid(x), out, k, s)) < 1e-10);
  }
}

TEST_CASE("group norm matches two-pass statistics and normalizes each group") {
  std::mt19937_64 rng(12);
  std::uniform_int_distribution<std::size_t> gs(1, 4), per(1, 4), len(1, 30);
  for (int trial = 0; trial < 25; ++trial) {
    const std::size_t groups = gs(rng), channels = groups * per(rng), t = len(rng) + 1;
    Tensor<double> scale({channels}), shift({channels});
    FillRandom(&scale, rng);
    FillRandom(&shift, rng);
    Mat x = RandomMatrix(channels, t, rng);
    x.array() = x.array() * 3.0 + 2.0;
    Mat xhat;
    std::vector<double> inv_std;
    const Mat y = GroupNormForward(x, groups, scale, shift, &xhat, &inv_std);
    CHECK(MaxDiff(y, oracle::GroupNorm(ToGrid(x), groups, Flat(scale), Flat(shift))) < 1e-10);
    const std::size_t p = channels / groups;
    for (std::size_t g = 0; g < groups; ++g) {
      const auto block = xhat.middleRows(static_cast<Eigen::Index>(g * p), static_cast<Eigen::Index>(p));
      const double mean = block.mean();
      const double var = (block.array() - mean).square().mean();
      CHECK(std::abs(mean) < 1e-5);
      CHECK(std::abs(var - 1.0) < 1e-5);
    }
  }
}

TEST_CASE("LSTM forward matches the direct recurrence") {
  std::mt19937_64 rng(13);
  std::uniform_int_distribution<std::size_t> dim(1, 6), steps(1, 12);
  for (int trial = 0; trial < 25; ++trial) {
    const std::size_t in = dim(rng), h = dim(rng), t = steps(rng);
    Tensor<double> w_ih({4 * h, in}), w_hh({4 * h, h}), bias({4 * h});
    FillRandom(&w_ih, rng, 0.7);
    FillRandom(&w_hh, rng, 0.7);
    FillRandom(&bias, rng, 0.5);
    const Mat x = RandomMatrix(t, in, rng);
    LstmCache<double> cache;
    const Vector<double> got = LstmForward(w_ih, w_hh, bias, x, &cache);
    const auto want = oracle::Lstm(Flat(w_ih), Flat(w_hh), Flat(bias), ToGrid(x), h);
    for (std::size_t j = 0; j < h; ++j) CHECK(std::abs(got[j] - want[j]) < 1e-10);
  }
}

TEST_CASE("MLP forward matches the direct loop") {
  std::mt19937_64 rng(14);
  std::uniform_int_distribution<std::size_t> dim(1, 9), depth(1, 4);
  for (int trial = 0; trial < 25; ++trial) {
    std::vector<LinearLayer<double>> layers;
    std::size_t in = dim(rng);
    const std::size_t first = in;
    const std::size_t n = depth(rng);
    for (std::size_t l = 0; l < n; ++l) {
      const std::size_t out = dim(rng);
      LinearLayer<double> layer{Tensor<double>({out, in}), Tensor<double>({out})};
      FillRandom(&layer.weight, rng);
      FillRandom(&layer.bias, rng);
      layers.push_back(layer);
      in = out;
    }
    const Mat x = RandomMatrix(3, first, rng);
    const Mat y = MlpForward(layers, x, static_cast<MlpCache<double>*>(nullptr));
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
      const std::vector<double> row(x.row(r).data(), x.row(r).data() + x.cols());
      const auto want = oracle::Mlp(ToDense(layers), row);
      for (std::size_t c = 0; c < want.size(); ++c) CHECK(std::abs(y(r, static_cast<Eigen::Index>(c)) - want[c]) < 1e-10);
    }
  }
}

TEST_CASE("default architecture shapes") {
  const ModelConfig config;
  Rng rng(1);
  const auto p = InitParams<float>(config, rng);
  CHECK(p.conv[0].weight.shape == std::vector<std::size_t>{512, 1, 10});
  CHECK(p.conv[1].weight.shape == std::vector<std::size_t>{512, 512, 8});
  CHECK(p.lstm.w_ih.shape == std::vector<std::size_t>{2048, 512});
  CHECK(p.regressor[0].weight.shape == std::vector<std::size_t>{512, 512});
  CHECK(p.regressor[2].weight.shape == std::vector<std::size_t>{3, 128});
  CHECK(p.discriminator[0].weight.shape == std::vector<std::size_t>{1024, 1024});
  CHECK(p.discriminator[2].weight.shape == std::vector<std::size_t>{1, 128});
  CHECK(config.FrameCounts(64000) == std::vector<std::size_t>{12799, 3198, 1598, 798, 398});
  CHECK(config.MinInputLength() == 465);
  CHECK(config.FrameCounts(465).back() == 1);
  CHECK(config.FrameCounts(466).back() == 1);
  CHECK_THROWS_WITH_AS(config.FrameCounts(464), doctest::Contains("input too short"),
                       std::invalid_argument);
}

TEST_CASE("parameter names are unique and cover every array") {
  ModelConfig config;
  config.conv_channels = 16;
  config.latent_dim = 8;
  Rng rng(1);
  auto p = InitParams<double>(config, rng);
  const auto named = p.Named();
  std::vector<std::string> names;
  for (const auto& n : named) names.push_back(n.name);
  std::sort(names.begin(), names.end());
  CHECK(std::adjacent_find(names.begin(), names.end()) == names.end());
  CHECK(named.size() == 5 * 4 + 3 + 3 * 2 + 3 * 2);
}

TEST_CASE("initialization scale, biases and determinism") {
  ModelConfig config;
  config.conv_channels = 32;
  config.latent_dim = 16;
  Rng a(5), b(5);
  const auto p = InitParams<double>(config, a);
  const auto q = InitParams<double>(config, b);
  const auto pn = p.Named();
  const auto qn = q.Named();
  for (std::size_t i = 0; i < pn.size(); ++i) REQUIRE(pn[i].tensor->data == qn[i].tensor->data);

  auto bound_ok = [](const Tensor<double>& t, double fan_in) {
    const double lim = 1.0 / std::sqrt(fan_in);
    return std::all_of(t.data.begin(), t.data.end(), [&](double v) { return std::abs(v) <= lim; });
  };
  CHECK(bound_ok(p.conv[0].weight, 10));
  CHECK(bound_ok(p.conv[1].weight, 32 * 8));
  CHECK(bound_ok(p.regressor[0].weight, 16));
  CHECK(bound_ok(p.discriminator[0].weight, 32));
  for (const auto& block : p.conv) {
    CHECK(std::all_of(block.bias.data.begin(), block.bias.data.end(), [](double v) { return v == 0; }));
    CHECK(std::all_of(block.norm_scale.data.begin(), block.norm_scale.data.end(), [](double v) { return v == 1; }));
    CHECK(std::all_of(block.norm_shift.data.begin(), block.norm_shift.data.end(), [](double v) { return v == 0; }));
  }
  for (std::size_t j = 0; j < 4 * 16; ++j) CHECK(p.lstm.bias[j] == (j >= 16 && j < 32 ? 1.0 : 0.0));

  // Float and double draws agree up to rounding.
  Rng c(5);
  const auto f = InitParams<float>(config, c);
  CHECK(f.conv[2].weight[7] == static_cast<float>(p.conv[2].weight[7]));
}

ModelConfig TinyConfig() {
  ModelConfig c;
  c.conv_channels = 8;
  c.groupnorm_groups = 4;
  c.latent_dim = 4;
  c.regressor_hidden = {6, 5};
  c.discriminator_hidden = {7, 3};
  return c;
}

TEST_CASE("encoder equals the composition of the layer oracles") {
  const ModelConfig config = TinyConfig();
  Rng rng(21);
  const auto p = InitParams<double>(config, rng);
  std::mt19937_64 data(3);
  std::normal_distribution<float> n(0.0f, 0.5f);
  for (std::size_t len : {465, 466, 900, 1333}) {
    std::vector<float> wave(len);
    for (auto& x : wave) x = n(data);
    oracle::Grid act(1, std::vector<double>(wave.begin(), wave.end()));
    for (std::size_t l = 0; l < 5; ++l) {
      act = oracle::Conv1d(Flat(p.conv[l].weight), Flat(p.conv[l].bias), act, config.conv_channels,
                           config.kernel_sizes[l], config.strides[l]);
      act = oracle::GroupNorm(act, config.groupnorm_groups, Flat(p.conv[l].norm_scale),
                              Flat(p.conv[l].norm_shift));
      for (auto& row : act) {
        for (auto& v : row) v = std::max(v, 0.0);
      }
    }
    oracle::Grid frames(act[0].size(), std::vector<double>(act.size()));
    for (std::size_t c = 0; c < act.size(); ++c) {
      for (std::size_t t = 0; t < act[c].size(); ++t) frames[t][c] = act[c][t];
    }
    const auto want = oracle::Lstm(Flat(p.lstm.w_ih), Flat(p.lstm.w_hh), Flat(p.lstm.bias), frames,
                                   config.latent_dim);
    const Vector<double> got = EncodeWaveform<double>(p, config, wave);
    REQUIRE(got.size() == 4);
    for (std::size_t j = 0; j < 4; ++j) CHECK(std::abs(got[j] - want[j]) < 1e-10);
  }
}

TEST_CASE("batched encoding equals per-row encoding at any thread count") {
  const ModelConfig config = TinyConfig();
  Rng rng(22);
  const auto p = InitParams<float>(config, rng);
  std::mt19937_64 data(4);
  std::normal_distribution<float> n(0.0f, 0.5f);
  std::vector<std::vector<float>> batch(5, std::vector<float>(1000));
  for (auto& w : batch) {
    for (auto& x : w) x = n(data);
  }
  const Matrix<float> one = EncoderForward(p, config, batch, 1);
  const Matrix<float> three = EncoderForward(p, config, batch, 3);
  CHECK(one == three);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    CHECK(Vector<float>(one.row(static_cast<Eigen::Index>(i)).transpose()) ==
          EncodeWaveform<float>(p, config, batch[i]));
  }
  CHECK_THROWS_WITH(EncodeWaveform<float>(p, config, std::vector<float>(464)),
                    doctest::Contains("input too short"));
}

TEST_CASE("regressor and discriminator heads") {
  const ModelConfig config = TinyConfig();
  Rng rng(23);
  auto p = InitParams<double>(config, rng);
  std::mt19937_64 data(5);

  SUBCASE("zero input with a zero output layer predicts zero") {
    auto q = p;
    std::fill(q.regressor.back().weight.data.begin(), q.regressor.back().weight.data.end(), 0.0);
    std::fill(q.discriminator.back().weight.data.begin(), q.discriminator.back().weight.data.end(), 0.0);
    const Mat z = Mat::Zero(2, 4);
    CHECK(RegressorForward(q, z).isZero(0));
    const Vector<double> logit = DiscriminatorForward(q, z, z);
    CHECK(logit.isZero(0));
    CHECK(1.0 / (1.0 + std::exp(-logit[0])) == 0.5);
  }
  SUBCASE("rows are independent") {
    const Mat z = RandomMatrix(4, 4, data);
    Mat swapped = z;
    swapped.row(0) = z.row(3);
    swapped.row(3) = z.row(0);
    const Mat out = RegressorForward(p, z);
    const Mat out_swapped = RegressorForward(p, swapped);
    CHECK(out.row(0) == out_swapped.row(3));
    CHECK(out.row(1) == out_swapped.row(1));
  }
  SUBCASE("outputs match the MLP oracle") {
    for (int trial = 0; trial < 20; ++trial) {
      const Mat z1 = RandomMatrix(1, 4, data), z2 = RandomMatrix(1, 4, data);
      const Mat out = RegressorForward(p, z1);
      const auto want = oracle::Mlp(ToDense(p.regressor), {z1.data(), z1.data() + 4});
      for (int c = 0; c < 3; ++c) CHECK(std::abs(out(0, c) - want[c]) < 1e-12);
      std::vector<double> pair(z1.data(), z1.data() + 4);
      pair.insert(pair.end(), z2.data(), z2.data() + 4);
      const auto logit = oracle::Mlp(ToDense(p.discriminator), pair);
      CHECK(std::abs(DiscriminatorForward(p, z1, z2)[0] - logit[0]) < 1e-12);
    }
  }
}

}  // namespace
}  // namespace sslprof
