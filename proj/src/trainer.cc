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

#include "sslprof/trainer.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>

#include "sslprof/gradients.h"
#include "sslprof/objectives.h"
#include "sslprof/optimizer.h"

namespace sslprof {

std::string LossLogHeader() { return "epoch,l_p,l_repr,l_c,total,val"; }

std::string FormatLossLogRow(const EpochLog& row) {
  return std::to_string(row.epoch) + "," + FormatDouble(row.l_p) + "," +
         FormatDouble(row.l_repr) + "," + FormatDouble(row.l_c) + "," +
         FormatDouble(row.total) + "," + FormatDouble(row.val);
}

Matrix<float> EncodeRecords(const ModelParams<float>& params, const ModelConfig& model,
                            std::span<const SpeakerRecord> records, AudioStore& store,
                            const InferenceOptions& options) {
  Matrix<float> latent(static_cast<Eigen::Index>(records.size()),
                       static_cast<Eigen::Index>(model.latent_dim));
  Rng unused(0);
  const std::size_t step = std::max<std::size_t>(options.batch_size, 1);
  for (std::size_t begin = 0; begin < records.size(); begin += step) {
    const std::size_t end = std::min(records.size(), begin + step);
    std::vector<std::vector<float>> batch;
    for (std::size_t i = begin; i < end; ++i) {
      batch.push_back(
          CropOrPad(store.Get(records[i].utterance_path), options.crop_len, CropMode::kCenter,
                    unused)
              .samples);
    }
    latent.middleRows(static_cast<Eigen::Index>(begin), static_cast<Eigen::Index>(end - begin)) =
        EncoderForward(params, model, batch, options.threads);
  }
  return latent;
}

std::vector<ProfilePrediction<double>> PredictRaw(const ModelParams<float>& params,
                                                  const ModelConfig& model,
                                                  std::span<const SpeakerRecord> records,
                                                  AudioStore& store,
                                                  const InferenceOptions& options) {
  const Matrix<float> outputs =
      RegressorForward(params, EncodeRecords(params, model, records, store, options));
  std::vector<ProfilePrediction<double>> out;
  out.reserve(records.size());
  for (const auto& p : ToPredictions(outputs)) {
    out.push_back({static_cast<double>(p.height), static_cast<double>(p.age),
                   static_cast<double>(p.gender_logit)});
  }
  return out;
}

double ValidationLoss(const ModelParams<float>& params, const ModelConfig& model,
                      std::span<const SpeakerRecord> dev, const LabelStats& stats,
                      const LossWeights& weights, AudioStore& store,
                      const InferenceOptions& options) {
  if (dev.empty()) throw std::invalid_argument("validation needs a non-empty dev set");
  const auto preds = PredictRaw(params, model, dev, store, options);
  std::vector<ProfileTarget> targets;
  for (const auto& r : dev) targets.push_back(MakeTarget(r, stats));
  return SupervisedProfileLoss<double>(preds, targets, weights, model.task_mode);
}

namespace {

InferenceOptions InferenceFor(const Checkpoint& checkpoint, int threads) {
  InferenceOptions o;
  o.crop_len = checkpoint.config.crop_len;
  o.threads = threads;
  return o;
}

std::string Describe(const LossBreakdown& l) {
  return "l_p=" + FormatDouble(l.l_p) + " l_repr=" + FormatDouble(l.l_repr) +
         " l_c=" + FormatDouble(l.l_c) + " total=" + FormatDouble(l.total);
}

void WriteLossLog(const std::filesystem::path& path, const std::vector<EpochLog>& history) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write loss log: " + path.string());
  out << LossLogHeader() << "\n";
  for (const auto& row : history) out << FormatLossLogRow(row) << "\n";
}

}  // namespace

TrainResult Train(const TrainConfig& config, const TrainHooks& hooks) {
  config.Validate();
  const bool use_triplets = config.enable_representation || config.enable_consistency;
  if (use_triplets && config.unlabeled_manifest.empty()) {
    throw ConfigError("invalid config: the representation and consistency paths need "
                      "unlabeled_manifest");
  }

  TrainResult result;
  auto labeled = LoadManifest(config.labeled_manifest, ManifestKind::kLabeled);
  if (!config.dev_manifest.empty()) {
    result.train_records = std::move(labeled);
    result.dev_records = LoadManifest(config.dev_manifest, ManifestKind::kLabeled);
  } else {
    Rng split_rng = DeriveStream(config.seed, "split");
    auto split = SplitDev(labeled, config.dev_fraction, split_rng);
    result.train_records = std::move(split.train);
    result.dev_records = std::move(split.dev);
  }
  if (result.train_records.empty()) throw std::invalid_argument("no training records");
  if (result.dev_records.empty()) {
    throw std::invalid_argument("validation needs a non-empty dev set");
  }
  std::optional<TripletSampler> sampler;
  if (use_triplets) {
    sampler.emplace(LoadManifest(config.unlabeled_manifest, ManifestKind::kUnlabeled));
  }

  const LabelStats stats = FitLabelStats(result.train_records);
  std::vector<Waveform> noise_bank;
  if (config.augment && !config.noise_dir.empty()) noise_bank = LoadNoiseBank(config.noise_dir);

  if (!config.out_dir.empty()) {
    std::filesystem::create_directories(config.out_dir);
    result.checkpoint_path = config.out_dir / "best.ckpt";
    result.loss_log_path = config.out_dir / "loss.csv";
  }

  Rng init_rng = DeriveStream(config.seed, "init");
  Rng shuffle_rng = DeriveStream(config.seed, "supervised");
  Rng sup_crop_rng = DeriveStream(config.seed, "supervised.crop");
  Rng sup_augment_rng = DeriveStream(config.seed, "supervised.augment");
  Rng trip_sample_rng = DeriveStream(config.seed, "triplet.sample");
  Rng trip_crop_rng = DeriveStream(config.seed, "triplet.crop");
  Rng trip_augment_rng = DeriveStream(config.seed, "triplet.augment");

  ModelParams<float> params = InitParams<float>(config.model, init_rng);
  OptState<float> opt = DiffGradInit(params, config.Hyper());

  AudioStore store(config.cache_audio);
  BatchAudioOptions audio;
  audio.crop_len = config.crop_len;
  audio.augment = config.augment;
  audio.noise = config.noise;
  audio.noise_bank = &noise_bank;

  InferenceOptions inference;
  inference.crop_len = config.crop_len;
  inference.threads = config.threads;

  ExecOptions exec;
  exec.threads = config.threads;

  result.best.config = config;
  result.best.stats = stats;
  result.best.best_val_loss = std::numeric_limits<double>::infinity();

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    SupervisedEpoch batches(result.train_records.size(), config.batch_size, shuffle_rng);
    EpochLog log;
    log.epoch = epoch;
    std::size_t step = 0;
    while (auto indices = batches.Next()) {
      const SupervisedBatch sup =
          AssembleSupervisedBatch(result.train_records, *indices, store, stats, audio,
                                  sup_crop_rng, sup_augment_rng);
      std::optional<TripletBatch> trip;
      if (sampler) {
        const auto rows = sampler->Sample(indices->size() * config.ratio, trip_sample_rng);
        trip = AssembleTripletBatch(*sampler, rows, store, audio, trip_crop_rng,
                                    trip_augment_rng);
      }
      LossGraph graph;
      graph.supervised = &sup;
      graph.triplets = trip ? &trip->waveforms : nullptr;
      graph.weights = config.weights;
      graph.paths = config.Paths();

      const std::string where =
          "epoch " + std::to_string(epoch) + " step " + std::to_string(step);
      GradientResult<float> grad;
      try {
        grad = ParameterGradients(params, config.model, graph, exec);
      } catch (const std::domain_error& e) {
        throw TrainingError("non-finite loss at " + where + ": " + e.what());
      }
      try {
        DiffGradStep(&params, grad.grads, &opt);
      } catch (const std::domain_error& e) {
        throw TrainingError("non-finite gradient at " + where + " (" + Describe(grad.paths) +
                            "): " + e.what());
      }
      log.l_p += grad.paths.l_p;
      log.l_repr += grad.paths.l_repr;
      log.l_c += grad.paths.l_c;
      log.total += grad.paths.total;
      if (hooks.on_step) {
        StepInfo info;
        info.epoch = epoch;
        info.step = step;
        info.loss = grad.paths;
        info.params = &params;
        info.grads = &grad.grads;
        info.triplets = trip ? &*trip : nullptr;
        hooks.on_step(info);
      }
      ++step;
    }
    const double steps = static_cast<double>(step);
    log.l_p /= steps;
    log.l_repr /= steps;
    log.l_c /= steps;
    log.total /= steps;
    log.val = ValidationLoss(params, config.model, result.dev_records, stats, config.weights,
                             store, inference);
    if (!std::isfinite(log.val)) {
      throw TrainingError("non-finite validation loss after epoch " + std::to_string(epoch));
    }
    result.history.push_back(log);

    if (log.val < result.best.best_val_loss) {
      result.best.params = params;
      result.best.best_val_loss = log.val;
      result.best.epoch = epoch;
      if (!result.checkpoint_path.empty()) SaveCheckpoint(result.best, result.checkpoint_path);
    }
    if (!result.loss_log_path.empty()) WriteLossLog(result.loss_log_path, result.history);
    if (hooks.on_epoch) hooks.on_epoch(log);
  }
  result.final_params = std::move(params);
  return result;
}

std::vector<PhysicalPrediction> PredictProfiles(const Checkpoint& checkpoint,
                                                std::span<const SpeakerRecord> records,
                                                AudioStore& store, int threads) {
  const auto raw = PredictRaw(checkpoint.params, checkpoint.config.model, records, store,
                              InferenceFor(checkpoint, threads));
  const LabelStats& s = checkpoint.stats;
  std::vector<PhysicalPrediction> out;
  out.reserve(raw.size());
  for (const auto& p : raw) {
    out.push_back({Destandardize(p.height, s.height_mean, s.height_std),
                   Destandardize(p.age, s.age_mean, s.age_std), Sigmoid(p.gender_logit)});
  }
  return out;
}

MetricSelection SelectionFor(TaskMode mode) {
  MetricSelection s;
  s.height = mode == TaskMode::kMulti || mode == TaskMode::kHeight;
  s.age = mode == TaskMode::kMulti || mode == TaskMode::kAge;
  s.gender = mode == TaskMode::kMulti || mode == TaskMode::kGender;
  return s;
}

MetricsReport Evaluate(const Checkpoint& checkpoint, std::span<const SpeakerRecord> records,
                       AudioStore& store, int threads) {
  if (records.empty()) throw std::invalid_argument("evaluation manifest is empty");
  std::vector<PhysicalTarget> targets;
  for (const auto& r : records) {
    if (!r.labeled()) {
      throw std::invalid_argument("evaluation record is unlabeled: " + r.utterance_path.string());
    }
    targets.push_back({*r.height_cm, *r.age_years, *r.gender});
  }
  const auto preds = PredictProfiles(checkpoint, records, store, threads);
  return GroupedReport(preds, targets, SelectionFor(checkpoint.config.model.task_mode));
}

std::vector<EmbeddingRow> ExportEmbeddings(const Checkpoint& checkpoint,
                                           std::span<const SpeakerRecord> records,
                                           AudioStore& store, int threads) {
  const Matrix<float> z = EncodeRecords(checkpoint.params, checkpoint.config.model, records,
                                        store, InferenceFor(checkpoint, threads));
  std::vector<EmbeddingRow> rows;
  rows.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto row = z.row(static_cast<Eigen::Index>(i));
    rows.push_back({records[i].utterance_path, records[i].speaker_id,
                    std::vector<float>(row.data(), row.data() + row.size())});
  }
  return rows;
}

void WriteEmbeddings(const std::filesystem::path& path, std::span<const EmbeddingRow> rows) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write embeddings: " + path.string());
  const std::size_t dim = rows.empty() ? 0 : rows.front().values.size();
  out << "utterance_path,speaker_id";
  for (std::size_t k = 0; k < dim; ++k) out << ",z" << k;
  out << "\n";
  char buf[32];
  for (const auto& r : rows) {
    out << r.utterance_path.generic_string() << "," << r.speaker_id;
    for (float v : r.values) {
      const auto res = std::to_chars(buf, buf + sizeof(buf), v);
      out << ",";
      out.write(buf, res.ptr - buf);
    }
    out << "\n";
  }
}

}  // namespace sslprof
