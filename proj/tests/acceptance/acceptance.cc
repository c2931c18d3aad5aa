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

// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero if any criterion fails. Pass criterion numbers as arguments to run
// a subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "sslprof/config.h"
#include "sslprof/data_sampler.h"
#include "sslprof/gradcheck.h"
#include "sslprof/gradients.h"
#include "sslprof/layers.h"
#include "sslprof/metrics.h"
#include "sslprof/model.h"
#include "sslprof/objectives.h"
#include "sslprof/optimizer.h"
#include "sslprof/trainer.h"
#include "support/oracles.h"

namespace sslprof {
namespace {

using Clock = std::chrono::steady_clock;
using Mat = Matrix<double>;
using testutil::TempDir;

struct Outcome {
  bool pass = false;
  std::string detail;
};

// Collects sub-check results for one criterion.
class Checks {
 public:
  void Expect(bool ok, const std::string& what) {
    if (!ok) failures_.push_back(what);
  }
  void Note(const std::string& text) { notes_.push_back(text); }
  Outcome Done() const {
    Outcome o;
    o.pass = failures_.empty();
    std::string sep;
    for (const auto& f : failures_) {
      o.detail += sep + "FAILED " + f;
      sep = "; ";
    }
    for (const auto& n : notes_) {
      o.detail += sep + n;
      sep = "; ";
    }
    return o;
  }

 private:
  std::vector<std::string> failures_;
  std::vector<std::string> notes_;
};

std::string Fmt(const char* fmt, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), fmt, v);
  return buf;
}

double Seconds(Clock::time_point since) {
  return std::chrono::duration<double>(Clock::now() - since).count();
}

std::vector<double> Flat(const Tensor<double>& t) { return {t.data.begin(), t.data.end()}; }

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
  if (static_cast<std::size_t>(m.rows()) != g.size()) return INFINITY;
  double worst = 0.0;
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    if (static_cast<std::size_t>(m.cols()) != g[r].size()) return INFINITY;
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      worst = std::max(worst, std::abs(m(r, c) - g[r][c]));
    }
  }
  return worst;
}

// Toy training setup shared by the learning criteria: reduced encoder,
// one-second crops.
TrainConfig ToyTrainConfig() {
  TrainConfig c;
  c.epochs = 50;
  c.crop_len = 16000;
  c.model.conv_channels = 32;
  c.model.latent_dim = 64;
  c.threads = 1;
  return c;
}

// ---------------------------------------------------------------------------

Outcome GradientSuite() {
  Checks checks;
  const auto start = Clock::now();
  GradcheckProblemOptions o;  // 32 channels, latent 64, 16000-sample inputs
  const auto problem = MakeGradcheckProblem(o);
  struct Case {
    const char* name;
    PathSwitches paths;
    bool supervised;
  };
  PathSwitches sup_only, repr_only, cons_stop, cons_sym, all_stop, all_sym;
  sup_only.representation = sup_only.consistency = false;
  repr_only.consistency = false;
  cons_stop.representation = false;
  cons_sym = cons_stop;
  cons_sym.consistency_gradient = ConsistencyGradient::kSymmetric;
  all_sym.consistency_gradient = ConsistencyGradient::kSymmetric;
  const std::vector<Case> cases = {
      {"L_p", sup_only, true},
      {"L_repr", repr_only, false},
      {"L_c stop-gradient", cons_stop, false},
      {"L_c symmetric", cons_sym, false},
      {"total stop-gradient", all_stop, true},
      {"total symmetric", all_sym, true},
  };
  double worst = 0.0;
  std::size_t coords = 0;
  for (const auto& c : cases) {
    const LossGraph graph = problem.Graph(c.paths, c.supervised);
    FiniteDifferenceOptions fd;
    fd.tolerance = 1e-4;
    fd.seed = 1;
    const auto report =
        FiniteDifferenceCheck(GraphObjective(problem.config, graph, problem.params),
                              problem.params, fd);
    checks.Expect(report.passed, std::string(c.name) + " (" +
                                     Fmt("max rel err %.2e", report.max_rel_error) + " in " +
                                     report.worst_array + ")");
    worst = std::max(worst, report.max_rel_error);
    coords += report.checked;
  }
  const double secs = Seconds(start);
  checks.Expect(secs < 300.0, "runtime " + Fmt("%.0f s", secs) + " exceeds 5 min");
  checks.Note(Fmt("6 graphs, max rel err %.2e", worst) + ", " + std::to_string(coords) +
              " coordinates, " + Fmt("%.0f s", secs));
  return checks.Done();
}

Outcome ForwardOracles() {
  Checks checks;
  constexpr int kInstances = 25;
  std::mt19937_64 rng(2026);
  std::uniform_int_distribution<std::size_t> dim(1, 6), ks(1, 10), ss(1, 5), steps(1, 12);
  double conv = 0.0, gn = 0.0, lstm = 0.0, mlp = 0.0;
  for (int trial = 0; trial < kInstances; ++trial) {
    {
      const std::size_t in = dim(rng), out = dim(rng), k = ks(rng), s = ss(rng);
      const std::size_t len = k + dim(rng) * 7;
      Tensor<double> w({out, in, k}), b({out});
      FillRandom(&w, rng);
      FillRandom(&b, rng);
      const Mat x = RandomMatrix(in, len, rng);
      conv = std::max(conv, MaxDiff(Conv1dForward(w, b, x, s),
                                    oracle::Conv1d(Flat(w), Flat(b), ToGrid(x), out, k, s)));
    }
    {
      const std::size_t groups = 1 + dim(rng) % 4, channels = groups * (1 + dim(rng) % 4);
      const std::size_t t = 2 + steps(rng);
      Tensor<double> scale({channels}), shift({channels});
      FillRandom(&scale, rng);
      FillRandom(&shift, rng);
      Mat x = RandomMatrix(channels, t, rng);
      x.array() = x.array() * 3.0 + 2.0;
      Mat xhat;
      std::vector<double> inv_std;
      gn = std::max(gn, MaxDiff(GroupNormForward(x, groups, scale, shift, &xhat, &inv_std),
                                oracle::GroupNorm(ToGrid(x), groups, Flat(scale), Flat(shift))));
    }
    {
      const std::size_t in = dim(rng), h = dim(rng), t = steps(rng);
      Tensor<double> w_ih({4 * h, in}), w_hh({4 * h, h}), bias({4 * h});
      FillRandom(&w_ih, rng, 0.7);
      FillRandom(&w_hh, rng, 0.7);
      FillRandom(&bias, rng, 0.5);
      const Mat x = RandomMatrix(t, in, rng);
      LstmCache<double> cache;
      const Vector<double> got = LstmForward(w_ih, w_hh, bias, x, &cache);
      const auto want = oracle::Lstm(Flat(w_ih), Flat(w_hh), Flat(bias), ToGrid(x), h);
      for (std::size_t j = 0; j < h; ++j) lstm = std::max(lstm, std::abs(got[j] - want[j]));
    }
    {
      std::vector<LinearLayer<double>> layers;
      std::vector<oracle::Dense> dense;
      std::size_t in = dim(rng) + 3;
      const std::size_t first = in;
      const std::size_t depth = 1 + dim(rng) % 4;
      for (std::size_t l = 0; l < depth; ++l) {
        const std::size_t out = dim(rng) + 3;
        LinearLayer<double> layer{Tensor<double>({out, in}), Tensor<double>({out})};
        FillRandom(&layer.weight, rng);
        FillRandom(&layer.bias, rng);
        dense.push_back({Flat(layer.weight), Flat(layer.bias), in, out});
        layers.push_back(layer);
        in = out;
      }
      const Mat x = RandomMatrix(3, first, rng);
      const Mat y = MlpForward(layers, x, static_cast<MlpCache<double>*>(nullptr));
      for (Eigen::Index r = 0; r < x.rows(); ++r) {
        const std::vector<double> row(x.row(r).data(), x.row(r).data() + x.cols());
        const auto want = oracle::Mlp(dense, row);
        for (std::size_t c = 0; c < want.size(); ++c) {
          mlp = std::max(mlp, std::abs(y(r, static_cast<Eigen::Index>(c)) - want[c]));
        }
      }
    }
  }
  checks.Expect(conv < 1e-10, "conv " + Fmt("%.1e", conv));
  checks.Expect(gn < 1e-10, "group norm " + Fmt("%.1e", gn));
  checks.Expect(lstm < 1e-10, "LSTM " + Fmt("%.1e", lstm));
  checks.Expect(mlp < 1e-10, "MLP " + Fmt("%.1e", mlp));
  checks.Note(std::to_string(kInstances) + " instances each; max abs diff conv " +
              Fmt("%.1e", conv) + ", group norm " + Fmt("%.1e", gn) + ", LSTM " +
              Fmt("%.1e", lstm) + ", MLP " + Fmt("%.1e", mlp));
  return checks.Done();
}

Outcome Shapes() {
  Checks checks;
  const ModelConfig config;  // full size: 512 channels, latent 512
  Rng rng(7);
  const auto params = InitParams<float>(config, rng);
  std::mt19937_64 gen(8);
  std::normal_distribution<float> noise(0.0f, 0.3f);
  std::vector<float> wave(64000);
  for (auto& x : wave) x = noise(gen);

  EncoderCache<float> cache;
  const Vector<float> z = EncodeWaveform<float>(params, config, wave, &cache);
  std::vector<std::size_t> frames;
  for (const auto& layer : cache.conv) frames.push_back(static_cast<std::size_t>(layer.affine.cols()));
  const std::vector<std::size_t> want{12799, 3198, 1598, 798, 398};
  checks.Expect(frames == want, "per-layer frame counts");
  checks.Expect(config.FrameCounts(64000) == want, "FrameCounts(64000)");
  checks.Expect(z.size() == 512 && z.allFinite(), "latent is a finite 512-vector");
  checks.Expect(config.MinInputLength() == 465, "minimum input length 465");
  for (std::size_t len : {465u, 466u}) {
    std::vector<float> w(wave.begin(), wave.begin() + static_cast<long>(len));
    EncoderCache<float> c;
    const auto zz = EncodeWaveform<float>(params, config, w, &c);
    checks.Expect(c.conv.back().affine.cols() == 1 && zz.size() == 512,
                  std::to_string(len) + " samples give one frame");
  }
  bool rejected = false;
  try {
    std::vector<float> w(wave.begin(), wave.begin() + 464);
    EncodeWaveform<float>(params, config, w);
  } catch (const std::invalid_argument&) {
    rejected = true;
  }
  checks.Expect(rejected, "464 samples rejected");
  checks.Note("frames 12799/3198/1598/798/398, z in R^512, 465/466 accepted, 464 rejected");
  return checks.Done();
}

Outcome LossIdentities() {
  Checks checks;
  const double ln2 = std::log(2.0);
  const LossWeights w;
  using Pred = ProfilePrediction<double>;

  const std::vector<Pred> pred = {{0.5, -0.5, 0.0}};
  const std::vector<ProfileTarget> target = {{0.0, 0.0, 1.0}};
  const double lp = SupervisedProfileLoss<double>(pred, target, w, TaskMode::kMulti);
  const double lr0 = RepresentationLoss<double>(std::vector<double>{0.0, 0.0},
                                                std::vector<double>{0.0, 0.0});
  const double lr1 = RepresentationLoss<double>(std::vector<double>{std::log(9.0)},
                                                std::vector<double>{std::log(0.25)});
  const std::vector<Pred> anchor = {{0.2, 0.2, 0.0}}, positive = {{0.0, 0.4, 0.0}};
  const double lc = ConsistencyLoss<double>(anchor, positive, w, TaskMode::kMulti);

  struct Example {
    const char* name;
    double got, exact, quoted;
  };
  const std::vector<Example> examples = {
      {"L_p", lp, 0.5 + 0.1 * ln2, 0.5693},
      {"L_repr at chance", lr0, 2.0 * ln2, 2.0 * ln2},
      {"L_repr at 0.9/0.2", lr1, -(std::log(0.9) + std::log(0.8)), 0.3285},
      {"L_c", lc, 0.08 + 0.1 * ln2, 0.1493},
  };
  std::string values;
  for (const auto& e : examples) {
    checks.Expect(std::abs(e.got - e.exact) < 1e-6, std::string(e.name) + " vs closed form");
    // The quoted figures are rounded to four decimals.
    checks.Expect(std::abs(e.got - e.quoted) <= 5e-5, std::string(e.name) + " vs " +
                                                          Fmt("%.4f", e.quoted));
    values += (values.empty() ? "" : ", ") + Fmt("%.6f", e.got);
  }

  // Stop-gradient: exactly zero into the positive branch, both at the loss
  // and after back-propagation through the full graph.
  std::vector<Pred> d_anchor, d_positive;
  ConsistencyLoss<double>(anchor, positive, w, TaskMode::kMulti,
                          ConsistencyGradient::kStopGradient, &d_anchor, &d_positive);
  bool zero = !d_positive.empty();
  for (const auto& d : d_positive) {
    zero = zero && d.height == 0.0 && d.age == 0.0 && d.gender_logit == 0.0;
  }
  GradcheckProblemOptions o;
  o.conv_channels = 16;
  o.latent_dim = 8;
  o.input_len = 2000;
  o.triplets = 4;
  const auto problem = MakeGradcheckProblem(o);
  PathSwitches paths;
  paths.representation = false;
  const auto r = ParameterGradients(problem.params, problem.config, problem.Graph(paths, false));
  zero = zero && r.latent.positive.isZero(0) && !r.latent.anchor.isZero(0);
  checks.Expect(zero, "positive-branch gradient is exactly zero");
  checks.Note("values " + values + "; positive-branch gradient exactly 0");
  return checks.Done();
}

double LibStep(double theta, double g, oracle::ScalarOptState* s, const DiffGradHyper& h) {
  s->t += 1;
  double th = theta, gg = g;
  DiffGradUpdate<double>({&th, 1}, {&gg, 1}, {&s->m, 1}, {&s->v, 1}, {&s->g_prev, 1}, s->t, h);
  return th;
}

Outcome Optimizer() {
  Checks checks;
  std::mt19937_64 rng(55);
  std::normal_distribution<double> grad(0.0, 1.0);
  std::uniform_real_distribution<double> lr(1e-4, 1e-1), b1(0.5, 0.99), b2(0.9, 0.9999);
  double worst = 0.0;
  for (int traj = 0; traj < 1000; ++traj) {
    DiffGradHyper h;
    h.lr = lr(rng);
    h.beta1 = b1(rng);
    h.beta2 = b2(rng);
    oracle::ScalarOptState lib, ref;
    double a = grad(rng), b = a;
    for (int step = 0; step < 50; ++step) {
      const double g = grad(rng) * std::exp(grad(rng));
      a = LibStep(a, g, &lib, h);
      b = oracle::DiffGradStep(b, g, &ref, h.lr, h.beta1, h.beta2, h.epsilon);
      worst = std::max(worst, std::abs(a - b));
    }
  }
  checks.Expect(worst < 1e-12, "trajectories " + Fmt("%.1e", worst));

  DiffGradHyper q;
  q.lr = 1e-2;
  oracle::ScalarOptState qs;
  double theta = 1.0;
  int reached = -1;
  for (int step = 1; step <= 2000; ++step) {
    theta = LibStep(theta, theta, &qs, q);
    if (reached < 0 && std::abs(theta) < 1e-3) reached = step;
  }
  checks.Expect(reached > 0 && std::abs(theta) < 1e-3, "quadratic not solved in 2000 steps");

  DiffGradHyper adam;
  adam.friction = false;
  adam.lr = 1e-2;
  bool exact = true;
  for (int traj = 0; traj < 200 && exact; ++traj) {
    oracle::ScalarOptState lib;
    double m = 0.0, v = 0.0, a = 0.7, b = 0.7;
    for (std::uint64_t t = 1; t <= 50; ++t) {
      const double g = grad(rng);
      a = LibStep(a, g, &lib, adam);
      b = oracle::AdamStep(b, g, &m, &v, t, adam.lr, adam.beta1, adam.beta2, adam.epsilon);
      exact = exact && a == b;
    }
  }
  checks.Expect(exact, "xi = 1 differs from Adam");
  checks.Note("1000 trajectories max diff " + Fmt("%.1e", worst) + "; |theta| < 1e-3 at step " +
              std::to_string(reached) + Fmt(", |theta_2000| = %.1e", std::abs(theta)) +
              "; Adam match exact");
  return checks.Done();
}

// Fraction of correctly classified pairs: (anchor, positive) should score
// above zero and (anchor, negative) below.
double PairAccuracy(const ModelParams<float>& params, const ModelConfig& model,
                    const std::vector<SpeakerRecord>& records, std::size_t crop_len,
                    std::size_t triplets, std::uint64_t seed) {
  AudioStore store;
  InferenceOptions opt;
  opt.crop_len = crop_len;
  const Matrix<float> z = EncodeRecords(params, model, records, store, opt);
  const TripletSampler sampler(records);
  Rng rng(seed);
  const auto rows = sampler.Sample(triplets, rng);
  Matrix<float> za(rows.size(), z.cols()), zp(rows.size(), z.cols()), zn(rows.size(), z.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    za.row(r) = z.row(static_cast<Eigen::Index>(rows[i].anchor));
    zp.row(r) = z.row(static_cast<Eigen::Index>(rows[i].positive));
    zn.row(r) = z.row(static_cast<Eigen::Index>(rows[i].negative));
  }
  const Vector<float> pos = DiscriminatorForward(params, za, zp);
  const Vector<float> neg = DiscriminatorForward(params, za, zn);
  std::size_t hits = 0;
  for (Eigen::Index i = 0; i < pos.size(); ++i) hits += (pos[i] > 0.0f) + (neg[i] < 0.0f);
  return static_cast<double>(hits) / (2.0 * static_cast<double>(rows.size()));
}

Outcome ToyLearning() {
  Checks checks;
  const auto start = Clock::now();
  TempDir dir("sslprof-accept6");
  Rng corpus_rng(606);
  const ToyCorpusConfig corpus_cfg;  // 20 x 5 labeled, 100 x 4 unlabeled
  const auto corpus = GenerateToyCorpus(corpus_cfg, dir.path() / "toy", corpus_rng);
  ToyCorpusConfig held_cfg;
  held_cfg.labeled_speakers = 4;
  held_cfg.labeled_utterances = 1;
  held_cfg.unlabeled_speakers = 20;
  held_cfg.unlabeled_utterances = 4;
  held_cfg.id_prefix = "held";
  Rng held_rng(607);
  const auto held = GenerateToyCorpus(held_cfg, dir.path() / "held", held_rng);

  TrainConfig config = ToyTrainConfig();
  config.labeled_manifest = corpus.labeled_manifest;
  config.unlabeled_manifest = corpus.unlabeled_manifest;
  config.out_dir = dir.path() / "run";
  config.seed = 1;
  const auto result = Train(config);

  const double first = result.history.front().l_p;
  const double last = result.history.back().l_p;
  checks.Expect(last <= 0.2 * first, "final L_p " + Fmt("%.4f", last) + " > 20% of " +
                                         Fmt("%.4f", first));

  AudioStore store;
  const auto report = Evaluate(result.best, result.dev_records, store);
  std::vector<double> mean_h, mean_a, true_h, true_a;
  for (const auto& r : result.dev_records) {
    mean_h.push_back(result.best.stats.height_mean);
    mean_a.push_back(result.best.stats.age_mean);
    true_h.push_back(*r.height_cm);
    true_a.push_back(*r.age_years);
  }
  const double base_h = oracle::Rmse(mean_h, true_h), base_a = oracle::Rmse(mean_a, true_a);
  const double rmse_h = *report.overall->rmse_height, rmse_a = *report.overall->rmse_age;
  checks.Expect(rmse_h <= 0.7 * base_h, "dev height RMSE " + Fmt("%.2f", rmse_h) +
                                            " vs baseline " + Fmt("%.2f", base_h));
  checks.Expect(rmse_a <= 0.7 * base_a, "dev age RMSE " + Fmt("%.2f", rmse_a) +
                                            " vs baseline " + Fmt("%.2f", base_a));

  const auto held_records = LoadManifest(held.unlabeled_manifest, ManifestKind::kUnlabeled);
  const double acc = PairAccuracy(result.best.params, config.model, held_records,
                                  config.crop_len, 1000, 608);
  checks.Expect(acc >= 0.90, "held-out pair accuracy " + Fmt("%.3f", acc));
  const double secs = Seconds(start);
  checks.Expect(secs <= 1800.0, "runtime " + Fmt("%.0f s", secs));

  checks.Note("L_p " + Fmt("%.4f", first) + " -> " + Fmt("%.4f", last) + Fmt(" (%.1f%%)", 100.0 * last / first) +
              "; dev RMSE height " + Fmt("%.2f", rmse_h) + " cm vs mean " + Fmt("%.2f", base_h) +
              ", age " + Fmt("%.2f", rmse_a) + " y vs mean " + Fmt("%.2f", base_a) +
              "; held-out pair accuracy " + Fmt("%.3f", acc) + "; " + Fmt("%.0f s", secs));
  return checks.Done();
}

Outcome SemiSupervision() {
  Checks checks;
  TempDir dir("sslprof-accept7");
  Rng corpus_rng(707);
  const auto corpus = GenerateToyCorpus(ToyCorpusConfig{}, dir.path() / "toy", corpus_rng);
  // Train on four male and four female speakers spread over each gender's
  // f0 range (speakers are generated in f0 order); the other twelve are dev.
  const auto labeled = LoadManifest(corpus.labeled_manifest, ManifestKind::kLabeled);
  std::set<std::string> train_ids;
  for (std::size_t i : {0, 3, 6, 9, 10, 13, 16, 19}) train_ids.insert(corpus.labeled[i].id);
  std::vector<SpeakerRecord> train, dev;
  for (const auto& r : labeled) (train_ids.count(r.speaker_id) ? train : dev).push_back(r);
  WriteManifest(dir.path() / "train8.csv", train, ManifestKind::kLabeled);
  WriteManifest(dir.path() / "dev12.csv", dev, ManifestKind::kLabeled);

  std::ostringstream table;
  table << "seed,variant,dev_age_rmse,dev_height_rmse,best_val_loss\n";
  double full_sum = 0.0, sup_sum = 0.0;
  const std::vector<std::uint64_t> seeds{1, 2, 3};
  for (std::uint64_t seed : seeds) {
    for (bool full : {true, false}) {
      TrainConfig config = ToyTrainConfig();
      config.labeled_manifest = dir.path() / "train8.csv";
      config.unlabeled_manifest = corpus.unlabeled_manifest;
      config.dev_manifest = dir.path() / "dev12.csv";
      config.seed = seed;
      config.enable_representation = full;
      config.enable_consistency = full;
      const auto result = Train(config);
      AudioStore store;
      const auto report = Evaluate(result.best, dev, store);
      const double age = *report.overall->rmse_age;
      (full ? full_sum : sup_sum) += age;
      table << seed << "," << (full ? "full" : "supervised_only") << "," << Fmt("%.4f", age)
            << "," << Fmt("%.4f", *report.overall->rmse_height) << ","
            << Fmt("%.6f", result.best.best_val_loss) << "\n";
    }
  }
  const double full_mean = full_sum / static_cast<double>(seeds.size());
  const double sup_mean = sup_sum / static_cast<double>(seeds.size());
  const double margin = sup_mean - full_mean;
  table << "mean,full," << Fmt("%.4f", full_mean) << ",,\n";
  table << "mean,supervised_only," << Fmt("%.4f", sup_mean) << ",,\n";
  table << "margin (supervised_only - full)," << Fmt("%.4f", margin) << ",,,\n";
  std::ofstream("semi_supervision_report.csv") << table.str();
  std::fputs(table.str().c_str(), stdout);

  checks.Expect(full_mean <= sup_mean, "full model age RMSE above the supervised-only ablation");
  checks.Note("mean dev age RMSE full " + Fmt("%.3f", full_mean) + " vs supervised-only " +
              Fmt("%.3f", sup_mean) + ", margin " + Fmt("%+.3f", margin) +
              " years (report: semi_supervision_report.csv)");
  return checks.Done();
}

std::vector<SpeakerRecord> Unlabeled(const std::vector<std::size_t>& utts) {
  std::vector<SpeakerRecord> out;
  for (std::size_t s = 0; s < utts.size(); ++s) {
    for (std::size_t u = 0; u < utts[s]; ++u) {
      SpeakerRecord r;
      r.speaker_id = "spk" + std::to_string(s);
      r.utterance_path = r.speaker_id + "_" + std::to_string(u) + ".wav";
      out.push_back(r);
    }
  }
  return out;
}

Outcome SamplerInvariants() {
  Checks checks;
  const TripletSampler sampler(Unlabeled({2, 5, 3, 4, 2, 6, 3, 2, 4, 7, 1, 1}));
  Rng rng(808);
  const auto rows = sampler.Sample(10000, rng);
  const auto& rec = sampler.records();
  std::size_t bad = 0;
  std::map<std::string, double> anchors;
  for (const auto& t : rows) {
    const bool ok = t.anchor != t.positive &&
                    rec[t.anchor].speaker_id == rec[t.positive].speaker_id &&
                    rec[t.anchor].speaker_id != rec[t.negative].speaker_id;
    bad += !ok;
    anchors[rec[t.anchor].speaker_id] += 1.0;
  }
  checks.Expect(rows.size() == 10000 && bad == 0, std::to_string(bad) + " invalid triplets");

  const double n = 10000.0, k = static_cast<double>(sampler.eligible_anchor_count());
  const double p = 1.0 / k, sigma = std::sqrt(n * p * (1.0 - p));
  double worst_z = 0.0;
  for (const auto& [id, c] : anchors) worst_z = std::max(worst_z, std::abs(c - n * p) / sigma);
  checks.Expect(anchors.size() == 10, "anchors drawn from the 10 eligible speakers only");
  checks.Expect(worst_z <= 3.0, "anchor frequency " + Fmt("%.2f sigma", worst_z));

  bool exact = true;
  std::size_t steps = 0;
  for (std::size_t count : {1u, 7u, 8u, 9u, 100u, 101u, 333u}) {
    for (std::size_t batch : {1u, 3u, 8u, 16u}) {
      for (std::size_t ratio : {1u, 2u, 4u, 7u}) {
        std::size_t covered = 0;
        for (const auto& s : BuildMixedSchedule(count, batch, ratio)) {
          exact = exact && s.triplet_size == ratio * s.supervised_size && s.supervised_size > 0;
          covered += s.supervised_size;
          ++steps;
        }
        exact = exact && covered == count;
      }
    }
  }
  checks.Expect(exact, "mixed schedule ratio");
  checks.Note("10000 triplets valid; worst anchor deviation " + Fmt("%.2f sigma", worst_z) +
              "; ratio exact on " + std::to_string(steps) + " schedule steps");
  return checks.Done();
}

std::string ReadFile(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

int RunCli(const std::string& args, const std::filesystem::path& log) {
  const std::string cmd = std::string(SSLPROF_CLI_PATH) + " " + args + " > '" + log.string() +
                          "' 2>&1";
  return std::system(cmd.c_str());
}

template <typename F>
std::string ErrorOf(F&& f) {
  try {
    f();
  } catch (const CheckpointError& e) {
    return e.what();
  } catch (const std::exception& e) {
    return std::string("wrong exception type: ") + e.what();
  }
  return "";
}

Outcome Determinism() {
  Checks checks;
  TempDir dir("sslprof-accept9");
  const auto d = dir.path();
  const auto log = d / "cli.log";
  checks.Expect(RunCli("synth --out-dir '" + (d / "toy").string() +
                           "' --seed 9 --labeled-speakers 6 --labeled-utterances 3"
                           " --unlabeled-speakers 6 --unlabeled-utterances 2"
                           " --min-seconds 0.5 --max-seconds 0.6",
                       log) == 0,
                "synth failed: " + ReadFile(log));
  std::ofstream(d / "train.cfg") << "labeled_manifest = " << (d / "toy/labeled.csv").string()
                                 << "\nunlabeled_manifest = "
                                 << (d / "toy/unlabeled.csv").string()
                                 << "\ndev_fraction = 0.34\nepochs = 3\ncrop_len = 4000\n"
                                    "model.conv_channels = 16\nmodel.latent_dim = 16\n";
  std::vector<std::string> digests;
  for (const char* run : {"a", "b"}) {
    const int rc = RunCli("train --config '" + (d / "train.cfg").string() +
                              "' --seed 3 --threads 1 --out-dir '" + (d / run).string() + "'",
                          log);
    checks.Expect(rc == 0, std::string("train run ") + run + " failed: " + ReadFile(log));
    digests.push_back(rc == 0 ? FileDigest(d / run / "best.ckpt") : std::string(run));
  }
  checks.Expect(digests[0] == digests[1], "checkpoint digests differ");
  checks.Expect(ReadFile(d / "a/loss.csv") == ReadFile(d / "b/loss.csv"), "loss logs differ");

  // Round trip through the library and through the file.
  const auto c = LoadCheckpoint(d / "a/best.ckpt");
  const std::string bytes = SerializeCheckpoint(c);
  checks.Expect(bytes == ReadFile(d / "a/best.ckpt"), "re-serialized bytes differ from file");
  SaveCheckpoint(c, d / "copy.ckpt");
  checks.Expect(FileDigest(d / "copy.ckpt") == digests[0], "save/load round trip not bitwise");

  const std::string last = c.params.Named().back().name;
  std::string bad = bytes;
  bad[0] = 'Q';
  const auto e_magic = ErrorOf([&] { ParseCheckpoint(bad); });
  checks.Expect(e_magic.find("not a checkpoint") != std::string::npos, "bad magic: " + e_magic);
  bad = bytes;
  bad[4] = 2;
  const auto e_version = ErrorOf([&] { ParseCheckpoint(bad); });
  checks.Expect(e_version.find("version") != std::string::npos, "version: " + e_version);
  const auto e_trunc = ErrorOf([&] { ParseCheckpoint(bytes.substr(0, bytes.size() - 8)); });
  checks.Expect(e_trunc.find(last) != std::string::npos, "truncation: " + e_trunc);
  bad = bytes;
  const auto at = bad.find("model.latent_dim=16");
  if (at != std::string::npos) bad.replace(at, 19, "model.latent_dim=17");
  const auto e_shape = ErrorOf([&] { ParseCheckpoint(bad); });
  checks.Expect(e_shape.find("shape mismatch") != std::string::npos, "shape: " + e_shape);

  std::ofstream(d / "broken.ckpt", std::ios::binary) << bytes.substr(0, bytes.size() / 2);
  const int rc = RunCli("evaluate --checkpoint '" + (d / "broken.ckpt").string() +
                            "' --manifest '" + (d / "toy/labeled.csv").string() +
                            "' --out-dir '" + (d / "eval").string() + "'",
                        log);
  const std::string cli_err = ReadFile(log);
  checks.Expect(rc != 0 && cli_err.find("truncated checkpoint") != std::string::npos,
                "CLI accepted a truncated checkpoint: " + cli_err);
  checks.Note("digest " + digests[0] + " for both runs; round trip bitwise; rejected: \"" +
              e_trunc + "\"");
  return checks.Done();
}

Outcome Metrics() {
  Checks checks;
  std::mt19937_64 rng(1010);
  std::uniform_real_distribution<double> h(140, 200), a(10, 80), pr(0, 1), u(-100, 100);
  std::bernoulli_distribution female(0.5);
  std::uniform_int_distribution<std::size_t> len(1, 60);
  bool exact = true;
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<PhysicalPrediction> preds;
    std::vector<PhysicalTarget> targets;
    const std::size_t n = len(rng);
    for (std::size_t i = 0; i < n; ++i) {
      preds.push_back({h(rng), a(rng), pr(rng)});
      targets.push_back({h(rng), a(rng), female(rng) ? Gender::kFemale : Gender::kMale});
    }
    const auto report = GroupedReport(preds, targets);
    for (int g = 0; g < 3; ++g) {
      std::vector<double> hp, ht, ap, at, gp, gt;
      for (std::size_t i = 0; i < n; ++i) {
        const bool in = g == 2 || (g == 0) == (targets[i].gender == Gender::kMale);
        if (!in) continue;
        hp.push_back(preds[i].height_cm);
        ht.push_back(targets[i].height_cm);
        ap.push_back(preds[i].age_years);
        at.push_back(targets[i].age_years);
        gp.push_back(preds[i].gender_prob);
        gt.push_back(GenderTarget(targets[i].gender));
      }
      const auto& group = g == 0 ? report.male : g == 1 ? report.female : report.overall;
      if (hp.empty()) {
        exact = exact && !group.has_value();
        continue;
      }
      exact = exact && group.has_value() && group->count == hp.size() &&
              *group->rmse_height == oracle::Rmse(hp, ht) &&
              *group->mae_height == oracle::Mae(hp, ht) &&
              *group->rmse_age == oracle::Rmse(ap, at) && *group->mae_age == oracle::Mae(ap, at) &&
              *group->gender_accuracy == oracle::Accuracy(gp, gt);
    }
  }
  checks.Expect(exact, "grouped metrics differ from the direct formulas");

  std::size_t violations = 0;
  for (int trial = 0; trial < 10000; ++trial) {
    const std::size_t n = len(rng);
    std::vector<double> p(n), t(n);
    for (auto& x : p) x = u(rng);
    for (auto& x : t) x = u(rng);
    violations += Rmse(p, t) < Mae(p, t);
  }
  checks.Expect(violations == 0, std::to_string(violations) + " instances with rmse < mae");
  checks.Note("500 grouped reports exact; rmse >= mae on 10000 instances");
  return checks.Done();
}

}  // namespace
}  // namespace sslprof

int main(int argc, char** argv) {
  using namespace sslprof;
  struct Criterion {
    int id;
    const char* title;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "gradient suite", GradientSuite},
      {2, "forward oracles", ForwardOracles},
      {3, "encoder shapes", Shapes},
      {4, "loss identities", LossIdentities},
      {5, "optimizer", Optimizer},
      {6, "toy learning", ToyLearning},
      {7, "semi-supervision effect", SemiSupervision},
      {8, "sampler invariants", SamplerInvariants},
      {9, "determinism and persistence", Determinism},
      {10, "metrics", Metrics},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

  int failed = 0;
  for (const auto& c : criteria) {
    if (!selected.empty() && !selected.count(c.id)) continue;
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("[%s] criterion %d: %s: %s\n", o.pass ? "PASS" : "FAIL", c.id, c.title,
                o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
