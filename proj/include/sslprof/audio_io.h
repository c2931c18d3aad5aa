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

#ifndef SSLPROF_AUDIO_IO_H_
#define SSLPROF_AUDIO_IO_H_

#include <cstddef>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <vector>

#include "sslprof/records.h"
#include "sslprof/rng.h"

namespace sslprof {

constexpr int kSampleRate = 16000;

class AudioError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Mono audio at 16 kHz with samples in [-1, 1].
struct Waveform {
  std::vector<float> samples;
  int sample_rate = kSampleRate;

  std::size_t size() const { return samples.size(); }
};

// Reads a RIFF/WAVE linear PCM 16-bit file. Channels are averaged to mono and
// samples scaled by 1/32768. Throws AudioError for anything that is not
// 16-bit PCM at 16 kHz.
Waveform LoadWaveform(const std::filesystem::path& path);

// Writes mono PCM 16-bit. Samples are clipped to [-1, 1] before quantizing.
void SaveWaveform(const Waveform& wave, const std::filesystem::path& path);

// Every *.wav file under `dir`, sorted by file name.
std::vector<Waveform> LoadNoiseBank(const std::filesystem::path& dir);

enum class CropMode { kRandom, kCenter };

// Fixed-length window. Longer inputs are cropped to a contiguous window,
// shorter ones zero-padded on both sides. Center mode never touches `rng`.
Waveform CropOrPad(const Waveform& wave, std::size_t target_len, CropMode mode,
                   Rng& rng);

struct NoiseAugmentConfig {
  double snr_db_min = 5.0;
  double snr_db_max = 20.0;
  double p_apply = 0.5;
};

double MeanPower(std::span<const float> samples);

// Amplitude factor applied to noise of power `noise_power` so that the mix
// reaches `snr_db` against a signal of power `signal_power`.
double NoiseScaleForSnr(double signal_power, double noise_power, double snr_db);

// Adds a noise clip (or white Gaussian noise when the bank is empty) at a
// random SNR with probability p_apply. Silent inputs are returned unchanged.
// When `applied_snr_db` is given it receives the drawn SNR, or NaN when no
// noise was added.
Waveform AugmentNoise(const Waveform& wave, const std::vector<Waveform>& noise_bank,
                      const NoiseAugmentConfig& config, Rng& rng,
                      double* applied_snr_db = nullptr);

struct LabelStats {
  double height_mean = 0.0;
  double height_std = 1.0;
  double age_mean = 0.0;
  double age_std = 1.0;
};

// Population mean and standard deviation of height and age.
LabelStats FitLabelStats(std::span<const SpeakerRecord> records);

double Standardize(double value, double mean, double std);
double Destandardize(double z, double mean, double std);

}  // namespace sslprof

#endif  // SSLPROF_AUDIO_IO_H_
