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

#ifndef SSLPROF_CONFIG_H_
#define SSLPROF_CONFIG_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "sslprof/audio_io.h"
#include "sslprof/gradients.h"
#include "sslprof/model.h"
#include "sslprof/objectives.h"
#include "sslprof/optimizer.h"

namespace sslprof {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TrainConfig {
  std::size_t epochs = 200;
  double lr = 1e-3;
  LossWeights weights;
  std::size_t ratio = 4;
  std::size_t batch_size = 8;
  std::size_t crop_len = 64000;
  std::uint64_t seed = 0;

  std::filesystem::path labeled_manifest;
  std::filesystem::path unlabeled_manifest;
  std::filesystem::path dev_manifest;  // empty: split from the labeled set
  double dev_fraction = 0.15;
  std::filesystem::path noise_dir;     // empty: white-noise augmentation
  std::filesystem::path out_dir;       // empty: keep everything in memory

  bool enable_representation = true;
  bool enable_consistency = true;
  double representation_weight = 1.0;
  double consistency_weight = 1.0;
  ConsistencyGradient consistency_gradient = ConsistencyGradient::kStopGradient;

  bool augment = true;
  NoiseAugmentConfig noise;

  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;
  bool friction = true;

  ModelConfig model;

  // Execution settings. They change wall time and file locations only, so
  // they are left out of the checkpoint snapshot.
  int threads = 1;
  bool cache_audio = true;

  void Validate() const;
  PathSwitches Paths() const;
  DiffGradHyper Hyper() const;
};

// Every config key in sorted order.
std::vector<std::string> ConfigKeys();

// Sets one key from its text form. Throws ConfigError for unknown keys and
// malformed values.
void SetConfigValue(TrainConfig* config, std::string_view key, std::string_view value);
std::string GetConfigValue(const TrainConfig& config, std::string_view key);

// `key = value` lines; blank lines and lines starting with '#' are skipped.
// Keys not given keep their defaults.
TrainConfig ParseConfig(std::string_view text);
TrainConfig LoadConfig(const std::filesystem::path& path);

// Canonical form: every key, sorted, one `key=value` per line. Execution
// keys are omitted unless `include_execution` is set.
std::string FormatConfig(const TrainConfig& config, bool include_execution = true);

// Shortest text that parses back to the same double.
std::string FormatDouble(double value);

}  // namespace sslprof

#endif  // SSLPROF_CONFIG_H_
