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

#ifndef SSLPROF_DATA_SAMPLER_H_
#define SSLPROF_DATA_SAMPLER_H_

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "sslprof/audio_io.h"
#include "sslprof/gradients.h"
#include "sslprof/records.h"
#include "sslprof/rng.h"

namespace sslprof {

class ManifestError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ManifestKind { kLabeled, kUnlabeled };

// Comma-separated, header row first, columns in any order. Utterance paths
// are resolved relative to the manifest's directory. Errors name the line.
std::vector<SpeakerRecord> LoadManifest(const std::filesystem::path& path, ManifestKind kind);

// Writes `records` with paths relative to the manifest's directory.
void WriteManifest(const std::filesystem::path& path, std::span<const SpeakerRecord> records,
                   ManifestKind kind);

struct DevSplit {
  std::vector<SpeakerRecord> train;
  std::vector<SpeakerRecord> dev;
};

// Speaker-level split that moves round(fraction * count) speakers of each
// gender to dev. Needs at least two speakers per gender.
DevSplit SplitDev(std::span<const SpeakerRecord> records, double fraction, Rng& rng);

// Decoded-waveform provider, optionally memoizing every file it reads.
class AudioStore {
 public:
  explicit AudioStore(bool cache = true) : cache_(cache) {}
  Waveform Get(const std::filesystem::path& path);

 private:
  bool cache_;
  std::map<std::filesystem::path, Waveform> memo_;
};

// Crop/pad + augmentation settings shared by the training batch builders.
struct BatchAudioOptions {
  std::size_t crop_len = 64000;
  bool augment = true;
  NoiseAugmentConfig noise;
  const std::vector<Waveform>* noise_bank = nullptr;
};

// One pass over the supervised records in shuffled order, drawn without
// replacement; the last batch may be short.
class SupervisedEpoch {
 public:
  SupervisedEpoch(std::size_t record_count, std::size_t batch_size, Rng& rng);
  std::optional<std::vector<std::size_t>> Next();
  std::size_t batch_count() const;

 private:
  std::vector<std::size_t> order_;
  std::size_t batch_size_;
  std::size_t cursor_ = 0;
};

ProfileTarget MakeTarget(const SpeakerRecord& record, const LabelStats& stats);

// Loads, random-crops and augments the given records; labels are standardized.
SupervisedBatch AssembleSupervisedBatch(std::span<const SpeakerRecord> records,
                                        std::span<const std::size_t> indices,
                                        AudioStore& store, const LabelStats& stats,
                                        const BatchAudioOptions& audio, Rng& crop_rng,
                                        Rng& augment_rng);

struct TripletIndices {
  std::size_t anchor = 0;
  std::size_t positive = 0;
  std::size_t negative = 0;
};

// Speaker-grouped view of the unlabeled records. Anchors come only from
// speakers with at least two utterances; negatives from any other speaker.
class TripletSampler {
 public:
  explicit TripletSampler(std::vector<SpeakerRecord> records);

  std::vector<TripletIndices> Sample(std::size_t count, Rng& rng) const;

  const std::vector<SpeakerRecord>& records() const { return records_; }
  std::size_t speaker_count() const { return speakers_.size(); }
  std::size_t eligible_anchor_count() const { return eligible_.size(); }

 private:
  std::vector<SpeakerRecord> records_;
  std::vector<std::string> speakers_;
  std::vector<std::vector<std::size_t>> utterances_;  // per speaker
  std::vector<std::size_t> eligible_;                 // speakers with >= 2 utterances
};

struct TripletBatch {
  TripletWaveforms waveforms;
  std::vector<TripletIndices> rows;
  std::vector<std::string> anchor_speaker_ids;
  std::vector<std::string> negative_speaker_ids;
};

TripletBatch AssembleTripletBatch(const TripletSampler& sampler,
                                  std::span<const TripletIndices> rows, AudioStore& store,
                                  const BatchAudioOptions& audio, Rng& crop_rng,
                                  Rng& augment_rng);

struct MixedStep {
  std::size_t supervised_size = 0;
  std::size_t triplet_size = 0;
};

// Per-step batch sizes for one epoch: ceil(count / batch) steps, each with
// ratio x (actual supervised size) triplets.
std::vector<MixedStep> BuildMixedSchedule(std::size_t supervised_count,
                                          std::size_t batch_size, std::size_t ratio);

struct ToySpeaker {
  std::string id;
  double f0_hz = 0.0;
  double resonance_hz = 0.0;
  double resonance_radius = 0.0;
};

double ToyHeightCm(double f0_hz);
double ToyAgeYears(double f0_hz);
Gender ToyGender(double f0_hz);

struct ToyCorpusConfig {
  std::size_t labeled_speakers = 20;
  std::size_t labeled_utterances = 5;
  std::size_t unlabeled_speakers = 100;
  std::size_t unlabeled_utterances = 4;
  double min_seconds = 1.0;
  double max_seconds = 1.5;
  double min_f0_gap_hz = 2.0;
  std::string id_prefix = "toy";
};

struct ToyCorpus {
  std::filesystem::path labeled_manifest;
  std::filesystem::path unlabeled_manifest;
  std::vector<ToySpeaker> labeled;
  std::vector<ToySpeaker> unlabeled;
};

// Draws `count` f0 values with the given minimum gap, half below 190 Hz and
// half at or above it, sorted ascending within each half.
std::vector<double> DrawToyF0(std::size_t count, double min_gap_hz, Rng& rng);

// Harmonic tone at the speaker's f0 with random harmonic phases, slow
// amplitude modulation and light white noise, shaped by the speaker's
// two-pole resonance.
Waveform SynthesizeToyUtterance(const ToySpeaker& speaker, std::size_t samples, Rng& rng);

// Writes wav/ files plus labeled.csv and unlabeled.csv under `out_dir`.
ToyCorpus GenerateToyCorpus(const ToyCorpusConfig& config, const std::filesystem::path& out_dir,
                            Rng& rng);

}  // namespace sslprof

#endif  // SSLPROF_DATA_SAMPLER_H_
