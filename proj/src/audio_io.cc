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

#include "sslprof/audio_io.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <string>

namespace sslprof {

namespace {

std::uint16_t ReadU16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::uint32_t ReadU32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

void PutU16(std::string* out, std::uint16_t v) {
  out->push_back(static_cast<char>(v & 0xff));
  out->push_back(static_cast<char>(v >> 8));
}

void PutU32(std::string* out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out->push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

}  // namespace

Waveform LoadWaveform(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw AudioError("cannot open audio file: " + path.string());
  const std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                         std::istreambuf_iterator<char>());
  const std::string where = " (" + path.string() + ")";
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw AudioError("unsupported encoding: not a RIFF/WAVE file" + where);
  }

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  bool have_fmt = false;
  const unsigned char* data = nullptr;
  std::size_t data_size = 0;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* chunk = bytes.data() + pos;
    const std::uint32_t size = ReadU32(chunk + 4);
    const std::size_t body = pos + 8;
    const std::size_t avail = bytes.size() - body;
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (size < 16 || avail < 16) throw AudioError("truncated fmt chunk" + where);
      const unsigned char* f = bytes.data() + body;
      format = ReadU16(f);
      channels = ReadU16(f + 2);
      rate = ReadU32(f + 4);
      bits = ReadU16(f + 14);
      if (format == kFormatExtensible && size >= 26 && avail >= 26) {
        format = ReadU16(f + 24);  // first two bytes of the sub-format GUID
      }
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      data = bytes.data() + body;
      data_size = std::min<std::size_t>(size, avail);
      break;
    }
    pos = body + size + (size & 1u);
  }

  if (!have_fmt) throw AudioError("missing fmt chunk" + where);
  if (format != kFormatPcm || bits != 16) {
    throw AudioError("unsupported encoding: only 16-bit linear PCM is read" + where);
  }
  if (channels == 0) throw AudioError("unsupported encoding: zero channels" + where);
  if (rate != static_cast<std::uint32_t>(kSampleRate)) {
    throw AudioError("unsupported sample rate " + std::to_string(rate) +
                     " Hz, expected 16000" + where);
  }
  if (data == nullptr) throw AudioError("missing data chunk" + where);

  const std::size_t frame_bytes = 2u * channels;
  const std::size_t frames = data_size / frame_bytes;
  Waveform wave;
  wave.samples.resize(frames);
  for (std::size_t i = 0; i < frames; ++i) {
    double acc = 0.0;
    for (std::size_t c = 0; c < channels; ++c) {
      acc += static_cast<std::int16_t>(ReadU16(data + i * frame_bytes + 2 * c));
    }
    wave.samples[i] = static_cast<float>(acc / channels / 32768.0);
  }
  return wave;
}

void SaveWaveform(const Waveform& wave, const std::filesystem::path& path) {
  const std::uint32_t data_bytes = static_cast<std::uint32_t>(wave.size() * 2);
  std::string out;
  out.reserve(44 + data_bytes);
  out += "RIFF";
  PutU32(&out, 36 + data_bytes);
  out += "WAVEfmt ";
  PutU32(&out, 16);
  PutU16(&out, kFormatPcm);
  PutU16(&out, 1);
  PutU32(&out, static_cast<std::uint32_t>(wave.sample_rate));
  PutU32(&out, static_cast<std::uint32_t>(wave.sample_rate) * 2);
  PutU16(&out, 2);
  PutU16(&out, 16);
  out += "data";
  PutU32(&out, data_bytes);
  for (float s : wave.samples) {
    const double clipped = std::clamp(static_cast<double>(s), -1.0, 1.0);
    const long q = std::lround(clipped * 32768.0);
    const auto v = static_cast<std::int16_t>(std::clamp(q, -32768L, 32767L));
    PutU16(&out, static_cast<std::uint16_t>(v));
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw AudioError("cannot write audio file: " + path.string());
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw AudioError("write failed: " + path.string());
}

std::vector<Waveform> LoadNoiseBank(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw AudioError("noise bank is not a directory: " + dir.string());
  }
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".wav") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  std::vector<Waveform> bank;
  bank.reserve(files.size());
  for (const auto& f : files) bank.push_back(LoadWaveform(f));
  return bank;
}

Waveform CropOrPad(const Waveform& wave, std::size_t target_len, CropMode mode,
                   Rng& rng) {
  if (target_len == 0) throw std::invalid_argument("target_len must be positive");
  const std::size_t len = wave.size();
  Waveform out;
  out.sample_rate = wave.sample_rate;
  if (len == target_len) {
    out.samples = wave.samples;
    return out;
  }
  if (len > target_len) {
    const std::size_t slack = len - target_len;
    std::size_t offset = slack / 2;
    if (mode == CropMode::kRandom) {
      offset = std::uniform_int_distribution<std::size_t>(0, slack)(rng);
    }
    out.samples.assign(wave.samples.begin() + static_cast<std::ptrdiff_t>(offset),
                       wave.samples.begin() +
                           static_cast<std::ptrdiff_t>(offset + target_len));
    return out;
  }
  const std::size_t slack = target_len - len;
  std::size_t left = slack / 2;
  if (mode == CropMode::kRandom) {
    left = std::uniform_int_distribution<std::size_t>(0, slack)(rng);
  }
  out.samples.assign(target_len, 0.0f);
  std::copy(wave.samples.begin(), wave.samples.end(),
            out.samples.begin() + static_cast<std::ptrdiff_t>(left));
  return out;
}

double MeanPower(std::span<const float> samples) {
  if (samples.empty()) return 0.0;
  double acc = 0.0;
  for (float s : samples) acc += static_cast<double>(s) * s;
  return acc / static_cast<double>(samples.size());
}

double NoiseScaleForSnr(double signal_power, double noise_power, double snr_db) {
  if (noise_power <= 0.0) return 0.0;
  return std::sqrt(signal_power / (noise_power * std::pow(10.0, snr_db / 10.0)));
}

Waveform AugmentNoise(const Waveform& wave, const std::vector<Waveform>& noise_bank,
                      const NoiseAugmentConfig& config, Rng& rng,
                      double* applied_snr_db) {
  if (!(config.snr_db_min <= config.snr_db_max)) {
    throw std::invalid_argument("empty SNR range");
  }
  if (!(config.p_apply >= 0.0 && config.p_apply <= 1.0)) {
    throw std::invalid_argument("p_apply must lie in [0, 1]");
  }
  if (applied_snr_db) *applied_snr_db = std::numeric_limits<double>::quiet_NaN();

  // The coin is always drawn so the stream advances identically per call.
  const double coin = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  if (!(coin < config.p_apply) || wave.size() == 0) return wave;
  const double signal_power = MeanPower(wave.samples);
  if (signal_power == 0.0) return wave;

  const double snr_db =
      std::uniform_real_distribution<double>(config.snr_db_min, config.snr_db_max)(rng);
  std::vector<float> noise(wave.size());
  const Waveform* clip = nullptr;
  if (!noise_bank.empty()) {
    clip = &noise_bank[std::uniform_int_distribution<std::size_t>(
        0, noise_bank.size() - 1)(rng)];
    if (clip->size() == 0) clip = nullptr;
  }
  if (clip != nullptr) {
    // Random start, looping the clip when it is shorter than the signal.
    std::size_t offset =
        std::uniform_int_distribution<std::size_t>(0, clip->size() - 1)(rng);
    for (float& n : noise) {
      n = clip->samples[offset];
      if (++offset == clip->size()) offset = 0;
    }
  } else {
    std::normal_distribution<float> gauss(0.0f, 1.0f);
    for (float& n : noise) n = gauss(rng);
  }
  const double noise_power = MeanPower(noise);
  if (noise_power == 0.0) return wave;
  const double scale = NoiseScaleForSnr(signal_power, noise_power, snr_db);

  Waveform out;
  out.sample_rate = wave.sample_rate;
  out.samples.resize(wave.size());
  for (std::size_t i = 0; i < wave.size(); ++i) {
    const double mixed = wave.samples[i] + scale * noise[i];
    out.samples[i] = static_cast<float>(std::clamp(mixed, -1.0, 1.0));
  }
  if (applied_snr_db) *applied_snr_db = snr_db;
  return out;
}

LabelStats FitLabelStats(std::span<const SpeakerRecord> records) {
  if (records.empty()) throw std::invalid_argument("no records to fit label stats");
  double h_sum = 0.0, a_sum = 0.0;
  for (const auto& r : records) {
    if (!r.height_cm || !r.age_years) {
      throw std::invalid_argument("record without height/age label: " +
                                  r.utterance_path.string());
    }
    h_sum += *r.height_cm;
    a_sum += *r.age_years;
  }
  const double n = static_cast<double>(records.size());
  LabelStats stats;
  stats.height_mean = h_sum / n;
  stats.age_mean = a_sum / n;
  double h_var = 0.0, a_var = 0.0;
  for (const auto& r : records) {
    h_var += (*r.height_cm - stats.height_mean) * (*r.height_cm - stats.height_mean);
    a_var += (*r.age_years - stats.age_mean) * (*r.age_years - stats.age_mean);
  }
  stats.height_std = std::sqrt(h_var / n);
  stats.age_std = std::sqrt(a_var / n);
  if (!(stats.height_std > 0.0)) throw std::invalid_argument("height labels have zero variance");
  if (!(stats.age_std > 0.0)) throw std::invalid_argument("age labels have zero variance");
  return stats;
}

double Standardize(double value, double mean, double std) {
  if (!(std > 0.0)) throw std::invalid_argument("standard deviation must be positive");
  return (value - mean) / std;
}

double Destandardize(double z, double mean, double std) {
  if (!(std > 0.0)) throw std::invalid_argument("standard deviation must be positive");
  return z * std + mean;
}

}  // namespace sslprof
