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

#include "sslprof/data_sampler.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <complex>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <numeric>
#include <set>
#include <sstream>

namespace sslprof {

namespace {

std::vector<std::string> SplitCsvLine(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  for (auto& c : cells) {
    const auto b = c.find_first_not_of(" \t");
    const auto e = c.find_last_not_of(" \t");
    c = b == std::string::npos ? std::string() : c.substr(b, e - b + 1);
  }
  return cells;
}

std::string FormatNumber(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

double ParseNumber(const std::string& text, const std::string& column, std::size_t line,
                   const std::filesystem::path& path) {
  double v = 0.0;
  const char* end = text.data() + text.size();
  const auto r = std::from_chars(text.data(), end, v);
  if (text.empty() || r.ec != std::errc() || r.ptr != end || !std::isfinite(v)) {
    throw ManifestError(path.string() + ": line " + std::to_string(line) + ": column " +
                        column + " is not a number: '" + text + "'");
  }
  return v;
}

}  // namespace

std::vector<SpeakerRecord> LoadManifest(const std::filesystem::path& path, ManifestKind kind) {
  std::ifstream in(path);
  if (!in) throw ManifestError("cannot open manifest: " + path.string());
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (header.empty() && std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) header = SplitCsvLine(line);
  }
  if (header.empty()) throw ManifestError(path.string() + ": missing header row");

  std::vector<std::string> required = {"utterance_path", "speaker_id"};
  if (kind == ManifestKind::kLabeled) {
    required.insert(required.end(), {"gender", "height_cm", "age_years"});
  }
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
  for (const auto& name : required) {
    if (!col.count(name)) {
      throw ManifestError(path.string() + ": missing column '" + name + "'");
    }
  }
  std::size_t needed = 0;
  for (const auto& name : required) needed = std::max(needed, col[name] + 1);

  const auto base = path.parent_path();
  std::vector<SpeakerRecord> records;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const auto cells = SplitCsvLine(line);
    const std::string where = path.string() + ": line " + std::to_string(line_no);
    if (cells.size() < needed) {
      throw ManifestError(where + ": expected at least " + std::to_string(needed) +
                          " fields, got " + std::to_string(cells.size()));
    }
    SpeakerRecord r;
    const std::string& rel = cells[col["utterance_path"]];
    if (rel.empty()) throw ManifestError(where + ": empty utterance_path");
    const std::filesystem::path listed(rel);
    r.utterance_path = listed.is_absolute() ? listed : base / listed;
    r.speaker_id = cells[col["speaker_id"]];
    if (r.speaker_id.empty()) throw ManifestError(where + ": empty speaker_id");
    if (kind == ManifestKind::kLabeled) {
      const std::string& g = cells[col["gender"]];
      if (g == "M") {
        r.gender = Gender::kMale;
      } else if (g == "F") {
        r.gender = Gender::kFemale;
      } else {
        throw ManifestError(where + ": gender must be M or F, got '" + g + "'");
      }
      r.height_cm = ParseNumber(cells[col["height_cm"]], "height_cm", line_no, path);
      r.age_years = ParseNumber(cells[col["age_years"]], "age_years", line_no, path);
      if (*r.height_cm < 100.0 || *r.height_cm > 250.0) {
        throw ManifestError(where + ": height_cm out of range [100, 250]: " +
                            FormatNumber(*r.height_cm));
      }
      if (*r.age_years < 1.0 || *r.age_years > 120.0) {
        throw ManifestError(where + ": age_years out of range [1, 120]: " +
                            FormatNumber(*r.age_years));
      }
    }
    records.push_back(std::move(r));
  }
  return records;
}

void WriteManifest(const std::filesystem::path& path, std::span<const SpeakerRecord> records,
                   ManifestKind kind) {
  const auto base = path.parent_path();
  std::string out = kind == ManifestKind::kLabeled
                        ? "utterance_path,speaker_id,gender,height_cm,age_years\n"
                        : "utterance_path,speaker_id\n";
  for (const auto& r : records) {
    out += r.utterance_path.lexically_proximate(base.empty() ? "." : base).generic_string();
    out += "," + r.speaker_id;
    if (kind == ManifestKind::kLabeled) {
      if (!r.labeled()) {
        throw ManifestError("unlabeled record in labeled manifest: " + r.utterance_path.string());
      }
      out += std::string(",") + GenderCode(*r.gender) + "," + FormatNumber(*r.height_cm) + "," +
             FormatNumber(*r.age_years);
    }
    out += "\n";
  }
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw ManifestError("cannot write manifest: " + path.string());
  f << out;
}

DevSplit SplitDev(std::span<const SpeakerRecord> records, double fraction, Rng& rng) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) {
    throw std::invalid_argument("dev fraction must lie in [0, 1]");
  }
  std::map<std::string, Gender> speaker_gender;
  for (const auto& r : records) {
    if (!r.gender) throw std::invalid_argument("dev split needs gender labels");
    auto [it, inserted] = speaker_gender.emplace(r.speaker_id, *r.gender);
    if (!inserted && it->second != *r.gender) {
      throw std::invalid_argument("speaker " + r.speaker_id + " has inconsistent gender");
    }
  }
  std::vector<std::string> by_gender[2];
  for (const auto& [id, g] : speaker_gender) by_gender[static_cast<int>(g)].push_back(id);
  if (by_gender[0].size() < 2 || by_gender[1].size() < 2) {
    throw std::invalid_argument("too few speakers for a dev split: need >= 2 per gender, have " +
                                std::to_string(by_gender[0].size()) + " M / " +
                                std::to_string(by_gender[1].size()) + " F");
  }
  std::set<std::string> dev_speakers;
  for (auto& ids : by_gender) {
    std::shuffle(ids.begin(), ids.end(), rng);
    const auto take = static_cast<std::size_t>(
        std::llround(fraction * static_cast<double>(ids.size())));
    dev_speakers.insert(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(take));
  }
  DevSplit split;
  for (const auto& r : records) {
    (dev_speakers.count(r.speaker_id) ? split.dev : split.train).push_back(r);
  }
  return split;
}

Waveform AudioStore::Get(const std::filesystem::path& path) {
  if (cache_) {
    auto it = memo_.find(path);
    if (it != memo_.end()) return it->second;
  }
  Waveform w = LoadWaveform(path);
  if (cache_) memo_.emplace(path, w);
  return w;
}

SupervisedEpoch::SupervisedEpoch(std::size_t record_count, std::size_t batch_size, Rng& rng)
    : order_(record_count), batch_size_(batch_size) {
  if (batch_size == 0) throw std::invalid_argument("batch_size must be >= 1");
  std::iota(order_.begin(), order_.end(), std::size_t{0});
  std::shuffle(order_.begin(), order_.end(), rng);
}

std::optional<std::vector<std::size_t>> SupervisedEpoch::Next() {
  if (cursor_ >= order_.size()) return std::nullopt;
  const std::size_t end = std::min(order_.size(), cursor_ + batch_size_);
  std::vector<std::size_t> batch(order_.begin() + static_cast<std::ptrdiff_t>(cursor_),
                                 order_.begin() + static_cast<std::ptrdiff_t>(end));
  cursor_ = end;
  return batch;
}

std::size_t SupervisedEpoch::batch_count() const {
  return (order_.size() + batch_size_ - 1) / batch_size_;
}

ProfileTarget MakeTarget(const SpeakerRecord& record, const LabelStats& stats) {
  ProfileTarget t;
  if (record.height_cm) t.height = Standardize(*record.height_cm, stats.height_mean, stats.height_std);
  if (record.age_years) t.age = Standardize(*record.age_years, stats.age_mean, stats.age_std);
  if (record.gender) t.gender = GenderTarget(*record.gender);
  return t;
}

namespace {

std::vector<float> PrepareTrainingAudio(const Waveform& wave, const BatchAudioOptions& audio,
                                        Rng& crop_rng, Rng& augment_rng) {
  Waveform w = CropOrPad(wave, audio.crop_len, CropMode::kRandom, crop_rng);
  if (audio.augment) {
    static const std::vector<Waveform> kNoBank;
    w = AugmentNoise(w, audio.noise_bank ? *audio.noise_bank : kNoBank, audio.noise,
                     augment_rng);
  }
  return std::move(w.samples);
}

}  // namespace

SupervisedBatch AssembleSupervisedBatch(std::span<const SpeakerRecord> records,
                                        std::span<const std::size_t> indices,
                                        AudioStore& store, const LabelStats& stats,
                                        const BatchAudioOptions& audio, Rng& crop_rng,
                                        Rng& augment_rng) {
  if (indices.empty()) throw std::invalid_argument("batch_size must be >= 1");
  SupervisedBatch batch;
  for (std::size_t idx : indices) {
    const auto& r = records[idx];
    batch.waveforms.push_back(
        PrepareTrainingAudio(store.Get(r.utterance_path), audio, crop_rng, augment_rng));
    batch.targets.push_back(MakeTarget(r, stats));
  }
  return batch;
}

TripletSampler::TripletSampler(std::vector<SpeakerRecord> records) : records_(std::move(records)) {
  std::map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < records_.size(); ++i) groups[records_[i].speaker_id].push_back(i);
  for (auto& [id, utts] : groups) {
    if (utts.size() >= 2) eligible_.push_back(speakers_.size());
    speakers_.push_back(id);
    utterances_.push_back(std::move(utts));
  }
  if (speakers_.size() < 2) {
    throw std::invalid_argument("triplet sampling needs at least 2 speakers, have " +
                                std::to_string(speakers_.size()));
  }
  if (eligible_.empty()) {
    throw std::invalid_argument("triplet sampling needs a speaker with >= 2 utterances");
  }
}

std::vector<TripletIndices> TripletSampler::Sample(std::size_t count, Rng& rng) const {
  std::vector<TripletIndices> rows(count);
  std::uniform_int_distribution<std::size_t> pick_anchor(0, eligible_.size() - 1);
  std::uniform_int_distribution<std::size_t> pick_other(0, speakers_.size() - 2);
  for (auto& row : rows) {
    const std::size_t spk = eligible_[pick_anchor(rng)];
    const auto& utts = utterances_[spk];
    const std::size_t a = std::uniform_int_distribution<std::size_t>(0, utts.size() - 1)(rng);
    std::size_t p = std::uniform_int_distribution<std::size_t>(0, utts.size() - 2)(rng);
    if (p >= a) ++p;
    std::size_t neg_spk = pick_other(rng);
    if (neg_spk >= spk) ++neg_spk;
    const auto& neg_utts = utterances_[neg_spk];
    const std::size_t n =
        std::uniform_int_distribution<std::size_t>(0, neg_utts.size() - 1)(rng);
    row = {utts[a], utts[p], neg_utts[n]};
  }
  return rows;
}

TripletBatch AssembleTripletBatch(const TripletSampler& sampler,
                                  std::span<const TripletIndices> rows, AudioStore& store,
                                  const BatchAudioOptions& audio, Rng& crop_rng,
                                  Rng& augment_rng) {
  TripletBatch batch;
  const auto& recs = sampler.records();
  for (const auto& row : rows) {
    batch.waveforms.anchors.push_back(
        PrepareTrainingAudio(store.Get(recs[row.anchor].utterance_path), audio, crop_rng,
                             augment_rng));
    batch.waveforms.positives.push_back(
        PrepareTrainingAudio(store.Get(recs[row.positive].utterance_path), audio, crop_rng,
                             augment_rng));
    batch.waveforms.negatives.push_back(
        PrepareTrainingAudio(store.Get(recs[row.negative].utterance_path), audio, crop_rng,
                             augment_rng));
    batch.rows.push_back(row);
    batch.anchor_speaker_ids.push_back(recs[row.anchor].speaker_id);
    batch.negative_speaker_ids.push_back(recs[row.negative].speaker_id);
  }
  return batch;
}

std::vector<MixedStep> BuildMixedSchedule(std::size_t supervised_count,
                                          std::size_t batch_size, std::size_t ratio) {
  if (batch_size == 0) throw std::invalid_argument("batch_size must be >= 1");
  if (ratio == 0) throw std::invalid_argument("unsupervised ratio must be >= 1");
  std::vector<MixedStep> steps;
  for (std::size_t done = 0; done < supervised_count; done += batch_size) {
    const std::size_t b = std::min(batch_size, supervised_count - done);
    steps.push_back({b, b * ratio});
  }
  return steps;
}

double ToyHeightCm(double f0_hz) { return 205.0 - 0.25 * f0_hz; }
double ToyAgeYears(double f0_hz) { return 20.0 + 0.15 * f0_hz; }
Gender ToyGender(double f0_hz) { return f0_hz < 190.0 ? Gender::kMale : Gender::kFemale; }

namespace {

constexpr double kToyF0Min = 80.0;
constexpr double kToyF0Split = 190.0;
constexpr double kToyF0Max = 300.0;

// `count` sorted values in [lo, hi] with pairwise gaps >= gap.
std::vector<double> DrawSpaced(std::size_t count, double lo, double hi, double gap, Rng& rng) {
  if (count == 0) return {};
  const double room = hi - lo - gap * static_cast<double>(count - 1);
  if (room < 0.0) {
    throw std::invalid_argument("cannot place " + std::to_string(count) +
                                " speakers in the toy f0 range with the requested gap");
  }
  std::uniform_real_distribution<double> dist(0.0, room);
  std::vector<double> u(count);
  for (auto& x : u) x = dist(rng);
  std::sort(u.begin(), u.end());
  for (std::size_t i = 0; i < count; ++i) u[i] += lo + gap * static_cast<double>(i);
  return u;
}

}  // namespace

std::vector<double> DrawToyF0(std::size_t count, double min_gap_hz, Rng& rng) {
  const std::size_t males = (count + 1) / 2;
  auto f0 = DrawSpaced(males, kToyF0Min, kToyF0Split - min_gap_hz, min_gap_hz, rng);
  const auto females = DrawSpaced(count - males, kToyF0Split, kToyF0Max, min_gap_hz, rng);
  f0.insert(f0.end(), females.begin(), females.end());
  return f0;
}

Waveform SynthesizeToyUtterance(const ToySpeaker& speaker, std::size_t samples, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double two_pi = 2.0 * std::numbers::pi;
  const double fs = kSampleRate;
  const auto harmonics = static_cast<std::size_t>(4000.0 / speaker.f0_hz);

  std::vector<std::complex<double>> phasor(harmonics), step(harmonics);
  std::vector<double> amp(harmonics);
  for (std::size_t h = 0; h < harmonics; ++h) {
    const double k = static_cast<double>(h + 1);
    phasor[h] = std::polar(1.0, two_pi * unit(rng));
    step[h] = std::polar(1.0, two_pi * k * speaker.f0_hz / fs);
    amp[h] = (0.7 + 0.6 * unit(rng)) / k;
  }
  const double depth = 0.1 + 0.3 * unit(rng);
  const double mod_hz = 1.5 + 3.5 * unit(rng);
  const double mod_phase = two_pi * unit(rng);

  std::vector<double> dry(samples);
  for (std::size_t n = 0; n < samples; ++n) {
    double acc = 0.0;
    for (std::size_t h = 0; h < harmonics; ++h) {
      acc += amp[h] * phasor[h].imag();
      phasor[h] *= step[h];
    }
    const double env = 1.0 + depth * std::sin(two_pi * mod_hz * static_cast<double>(n) / fs +
                                              mod_phase);
    dry[n] = env * acc;
  }

  // Two-pole resonator, mixed with the dry tone at equal RMS.
  const double r = speaker.resonance_radius;
  const double a1 = 2.0 * r * std::cos(two_pi * speaker.resonance_hz / fs);
  const double a2 = -r * r;
  std::vector<double> wet(samples);
  double y1 = 0.0, y2 = 0.0;
  for (std::size_t n = 0; n < samples; ++n) {
    const double y = dry[n] + a1 * y1 + a2 * y2;
    wet[n] = y;
    y2 = y1;
    y1 = y;
  }
  auto rms = [](const std::vector<double>& v) {
    double acc = 0.0;
    for (double x : v) acc += x * x;
    return std::sqrt(acc / std::max<std::size_t>(v.size(), 1));
  };
  const double dry_rms = std::max(rms(dry), 1e-12);
  const double wet_rms = std::max(rms(wet), 1e-12);
  std::vector<double> mix(samples);
  for (std::size_t n = 0; n < samples; ++n) mix[n] = dry[n] / dry_rms + wet[n] / wet_rms;

  std::normal_distribution<double> gauss(0.0, 1.0);
  const double noise_std = rms(mix) * std::pow(10.0, -30.0 / 20.0);
  double peak = 1e-12;
  for (auto& x : mix) {
    x += noise_std * gauss(rng);
    peak = std::max(peak, std::abs(x));
  }
  const double gain = (0.3 + 0.3 * unit(rng)) / peak;
  Waveform w;
  w.samples.resize(samples);
  for (std::size_t n = 0; n < samples; ++n) w.samples[n] = static_cast<float>(mix[n] * gain);
  return w;
}

ToyCorpus GenerateToyCorpus(const ToyCorpusConfig& config, const std::filesystem::path& out_dir,
                            Rng& rng) {
  if (config.labeled_speakers < 4) {
    throw std::invalid_argument("toy corpus needs at least 4 labeled speakers");
  }
  if (config.labeled_utterances == 0) {
    throw std::invalid_argument("toy corpus needs at least 1 utterance per labeled speaker");
  }
  if (config.unlabeled_speakers > 0 && config.unlabeled_utterances == 0) {
    throw std::invalid_argument("unlabeled speakers need at least 1 utterance");
  }
  if (!(config.min_seconds > 0.0 && config.min_seconds <= config.max_seconds)) {
    throw std::invalid_argument("invalid toy utterance duration range");
  }
  const auto wav_dir = out_dir / "wav";
  std::filesystem::create_directories(wav_dir);

  std::uniform_real_distribution<double> duration(config.min_seconds, config.max_seconds);
  std::uniform_real_distribution<double> res_hz(500.0, 2500.0);
  std::uniform_real_distribution<double> res_r(0.85, 0.95);

  auto make_speakers = [&](std::size_t count, const std::string& tag) {
    std::vector<ToySpeaker> speakers;
    const auto f0 = DrawToyF0(count, config.min_f0_gap_hz, rng);
    for (std::size_t i = 0; i < count; ++i) {
      char id[64];
      std::snprintf(id, sizeof(id), "%s%s%03zu", config.id_prefix.c_str(), tag.c_str(), i);
      speakers.push_back({id, f0[i], res_hz(rng), res_r(rng)});
    }
    return speakers;
  };
  auto render = [&](const std::vector<ToySpeaker>& speakers, std::size_t utts, bool labeled) {
    std::vector<SpeakerRecord> records;
    for (const auto& spk : speakers) {
      for (std::size_t u = 0; u < utts; ++u) {
        const auto n = static_cast<std::size_t>(std::lround(duration(rng) * kSampleRate));
        const auto path = wav_dir / (spk.id + "_" + std::to_string(u) + ".wav");
        SaveWaveform(SynthesizeToyUtterance(spk, n, rng), path);
        SpeakerRecord r;
        r.utterance_path = path;
        r.speaker_id = spk.id;
        if (labeled) {
          r.gender = ToyGender(spk.f0_hz);
          r.height_cm = ToyHeightCm(spk.f0_hz);
          r.age_years = ToyAgeYears(spk.f0_hz);
        }
        records.push_back(std::move(r));
      }
    }
    return records;
  };

  ToyCorpus corpus;
  corpus.labeled = make_speakers(config.labeled_speakers, "L");
  corpus.unlabeled = make_speakers(config.unlabeled_speakers, "U");
  corpus.labeled_manifest = out_dir / "labeled.csv";
  corpus.unlabeled_manifest = out_dir / "unlabeled.csv";
  WriteManifest(corpus.labeled_manifest, render(corpus.labeled, config.labeled_utterances, true),
                ManifestKind::kLabeled);
  WriteManifest(corpus.unlabeled_manifest,
                render(corpus.unlabeled, config.unlabeled_utterances, false),
                ManifestKind::kUnlabeled);
  return corpus;
}

}  // namespace sslprof
