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

#ifndef SSLPROF_TRAINER_H_
#define SSLPROF_TRAINER_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "sslprof/audio_io.h"
#include "sslprof/config.h"
#include "sslprof/data_sampler.h"
#include "sslprof/metrics.h"
#include "sslprof/model.h"

namespace sslprof {

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised when a training step produces a non-finite loss or gradient.
class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  std::uint32_t version = kCheckpointVersion;
  TrainConfig config;
  LabelStats stats;
  ModelParams<float> params;
  double best_val_loss = 0.0;
  std::uint64_t epoch = 0;
};

// "SSLP", u32 version, u64-length-prefixed config and stats text, then per
// parameter array: u64 name length, name, u64 rank, u64 dims, float32 data.
// All integers and floats little-endian.
std::string SerializeCheckpoint(const Checkpoint& checkpoint);
Checkpoint ParseCheckpoint(std::string_view bytes);
void SaveCheckpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
Checkpoint LoadCheckpoint(const std::filesystem::path& path);

// 64-bit FNV-1a of a byte string, as 16 hex digits.
std::string Fnv1aHex(std::string_view bytes);
std::string FileDigest(const std::filesystem::path& path);

struct EpochLog {
  std::size_t epoch = 0;  // 1-based
  double l_p = 0.0;
  double l_repr = 0.0;
  double l_c = 0.0;
  double total = 0.0;
  double val = 0.0;
};

std::string LossLogHeader();
std::string FormatLossLogRow(const EpochLog& row);

struct StepInfo {
  std::size_t epoch = 0;
  std::size_t step = 0;  // 0-based within the epoch
  LossBreakdown loss;
  const ModelParams<float>* params = nullptr;
  const ModelParams<float>* grads = nullptr;
  const TripletBatch* triplets = nullptr;  // null when both unlabeled paths are off
};

struct TrainHooks {
  std::function<void(const StepInfo&)> on_step;
  std::function<void(const EpochLog&)> on_epoch;
};

struct TrainResult {
  Checkpoint best;
  ModelParams<float> final_params;
  std::vector<EpochLog> history;
  std::vector<SpeakerRecord> train_records;
  std::vector<SpeakerRecord> dev_records;
  std::filesystem::path checkpoint_path;  // empty when out_dir is empty
  std::filesystem::path loss_log_path;
};

// Mixed-batch training with best-validation checkpointing. With a non-empty
// out_dir, writes best.ckpt and loss.csv there.
TrainResult Train(const TrainConfig& config, const TrainHooks& hooks = {});

// Shared settings for the deterministic inference passes (center crop, no
// augmentation).
struct InferenceOptions {
  std::size_t crop_len = 64000;
  std::size_t batch_size = 16;
  int threads = 1;
};

// Center-cropped latents, one row per record.
Matrix<float> EncodeRecords(const ModelParams<float>& params, const ModelConfig& model,
                            std::span<const SpeakerRecord> records, AudioStore& store,
                            const InferenceOptions& options);

// Raw regressor outputs (standardized height/age, gender logit) per record.
std::vector<ProfilePrediction<double>> PredictRaw(const ModelParams<float>& params,
                                                  const ModelConfig& model,
                                                  std::span<const SpeakerRecord> records,
                                                  AudioStore& store,
                                                  const InferenceOptions& options);

// Mean supervised loss over the dev set. Throws on an empty dev set.
double ValidationLoss(const ModelParams<float>& params, const ModelConfig& model,
                      std::span<const SpeakerRecord> dev, const LabelStats& stats,
                      const LossWeights& weights, AudioStore& store,
                      const InferenceOptions& options);

// Predictions in cm / years / probability of female.
std::vector<PhysicalPrediction> PredictProfiles(const Checkpoint& checkpoint,
                                                std::span<const SpeakerRecord> records,
                                                AudioStore& store, int threads = 1);

MetricSelection SelectionFor(TaskMode mode);

MetricsReport Evaluate(const Checkpoint& checkpoint, std::span<const SpeakerRecord> records,
                       AudioStore& store, int threads = 1);

struct EmbeddingRow {
  std::filesystem::path utterance_path;
  std::string speaker_id;
  std::vector<float> values;
};

std::vector<EmbeddingRow> ExportEmbeddings(const Checkpoint& checkpoint,
                                           std::span<const SpeakerRecord> records,
                                           AudioStore& store, int threads = 1);

// Header `utterance_path,speaker_id,z0,...`, one row per embedding.
void WriteEmbeddings(const std::filesystem::path& path, std::span<const EmbeddingRow> rows);

}  // namespace sslprof

#endif  // SSLPROF_TRAINER_H_
