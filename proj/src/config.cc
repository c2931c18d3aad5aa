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

#include "sslprof/config.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace sslprof {

std::string FormatDouble(double value) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, r.ptr);
}

namespace {

std::string Trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

[[noreturn]] void BadValue(std::string_view key, std::string_view value, std::string_view want) {
  throw ConfigError("config key '" + std::string(key) + "': expected " + std::string(want) +
                    ", got '" + std::string(value) + "'");
}

template <typename T>
T ParseScalar(std::string_view key, std::string_view value, std::string_view want) {
  T out{};
  const char* end = value.data() + value.size();
  const auto r = std::from_chars(value.data(), end, out);
  if (value.empty() || r.ec != std::errc() || r.ptr != end) BadValue(key, value, want);
  return out;
}

double ParseReal(std::string_view key, std::string_view value) {
  const double v = ParseScalar<double>(key, value, "a number");
  if (!std::isfinite(v)) BadValue(key, value, "a finite number");
  return v;
}

bool ParseBool(std::string_view key, std::string_view value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  BadValue(key, value, "true or false");
}

std::vector<std::size_t> ParseList(std::string_view key, std::string_view value) {
  std::vector<std::size_t> out;
  std::size_t start = 0;
  while (start <= value.size()) {
    const auto comma = value.find(',', start);
    const auto stop = comma == std::string_view::npos ? value.size() : comma;
    out.push_back(ParseScalar<std::size_t>(key, Trim(value.substr(start, stop - start)),
                                           "comma-separated integers"));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string FormatList(const std::vector<std::size_t>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(values[i]);
  }
  return out;
}

std::string FormatBool(bool v) { return v ? "true" : "false"; }

struct Field {
  std::function<std::string(const TrainConfig&)> get;
  std::function<void(TrainConfig&, std::string_view key, std::string_view)> set;
  bool execution = false;
};

#define SSLPROF_SIZE_FIELD(key, member)                                               \
  {key, {[](const TrainConfig& c) { return std::to_string(c.member); },               \
         [](TrainConfig& c, std::string_view k, std::string_view v) {                 \
           c.member = ParseScalar<std::size_t>(k, v, "a non-negative integer");       \
         }}}
#define SSLPROF_REAL_FIELD(key, member)                                               \
  {key, {[](const TrainConfig& c) { return FormatDouble(c.member); },                 \
         [](TrainConfig& c, std::string_view k, std::string_view v) {                 \
           c.member = ParseReal(k, v);                                                \
         }}}
#define SSLPROF_BOOL_FIELD(key, member)                                               \
  {key, {[](const TrainConfig& c) { return FormatBool(c.member); },                   \
         [](TrainConfig& c, std::string_view k, std::string_view v) {                 \
           c.member = ParseBool(k, v);                                                \
         }}}
#define SSLPROF_PATH_FIELD(key, member)                                               \
  {key, {[](const TrainConfig& c) { return c.member.generic_string(); },              \
         [](TrainConfig& c, std::string_view, std::string_view v) {                   \
           c.member = std::filesystem::path(std::string(v));                          \
         }}}
#define SSLPROF_LIST_FIELD(key, member)                                               \
  {key, {[](const TrainConfig& c) { return FormatList(c.member); },                   \
         [](TrainConfig& c, std::string_view k, std::string_view v) {                 \
           c.member = ParseList(k, v);                                                \
         }}}

const std::map<std::string, Field, std::less<>>& Fields() {
  static const std::map<std::string, Field, std::less<>> fields = {
      SSLPROF_REAL_FIELD("adam_epsilon", adam_epsilon),
      SSLPROF_BOOL_FIELD("augment", augment),
      SSLPROF_REAL_FIELD("augment_prob", noise.p_apply),
      SSLPROF_SIZE_FIELD("batch_size", batch_size),
      SSLPROF_REAL_FIELD("beta1", beta1),
      SSLPROF_REAL_FIELD("beta2", beta2),
      {"cache_audio",
       {[](const TrainConfig& c) { return FormatBool(c.cache_audio); },
        [](TrainConfig& c, std::string_view k, std::string_view v) {
          c.cache_audio = ParseBool(k, v);
        },
        true}},
      {"consistency_gradient",
       {[](const TrainConfig& c) {
          return std::string(c.consistency_gradient == ConsistencyGradient::kStopGradient
                                 ? "stop_gradient"
                                 : "symmetric");
        },
        [](TrainConfig& c, std::string_view k, std::string_view v) {
          if (v == "stop_gradient") {
            c.consistency_gradient = ConsistencyGradient::kStopGradient;
          } else if (v == "symmetric") {
            c.consistency_gradient = ConsistencyGradient::kSymmetric;
          } else {
            BadValue(k, v, "stop_gradient or symmetric");
          }
        }}},
      SSLPROF_REAL_FIELD("consistency_weight", consistency_weight),
      SSLPROF_SIZE_FIELD("crop_len", crop_len),
      SSLPROF_REAL_FIELD("dev_fraction", dev_fraction),
      SSLPROF_PATH_FIELD("dev_manifest", dev_manifest),
      SSLPROF_BOOL_FIELD("enable_consistency", enable_consistency),
      SSLPROF_BOOL_FIELD("enable_representation", enable_representation),
      SSLPROF_SIZE_FIELD("epochs", epochs),
      SSLPROF_BOOL_FIELD("friction", friction),
      SSLPROF_PATH_FIELD("labeled_manifest", labeled_manifest),
      SSLPROF_REAL_FIELD("lr", lr),
      SSLPROF_SIZE_FIELD("model.conv_channels", model.conv_channels),
      SSLPROF_LIST_FIELD("model.discriminator_hidden", model.discriminator_hidden),
      SSLPROF_SIZE_FIELD("model.groupnorm_groups", model.groupnorm_groups),
      SSLPROF_LIST_FIELD("model.kernel_sizes", model.kernel_sizes),
      SSLPROF_SIZE_FIELD("model.latent_dim", model.latent_dim),
      SSLPROF_LIST_FIELD("model.regressor_hidden", model.regressor_hidden),
      SSLPROF_LIST_FIELD("model.strides", model.strides),
      SSLPROF_PATH_FIELD("noise_dir", noise_dir),
      {"out_dir",
       {[](const TrainConfig& c) { return c.out_dir.generic_string(); },
        [](TrainConfig& c, std::string_view, std::string_view v) {
          c.out_dir = std::filesystem::path(std::string(v));
        },
        true}},
      SSLPROF_SIZE_FIELD("ratio", ratio),
      SSLPROF_REAL_FIELD("representation_weight", representation_weight),
      {"seed",
       {[](const TrainConfig& c) { return std::to_string(c.seed); },
        [](TrainConfig& c, std::string_view k, std::string_view v) {
          c.seed = ParseScalar<std::uint64_t>(k, v, "a non-negative integer");
        }}},
      SSLPROF_REAL_FIELD("snr_db_max", noise.snr_db_max),
      SSLPROF_REAL_FIELD("snr_db_min", noise.snr_db_min),
      {"task_mode",
       {[](const TrainConfig& c) { return TaskModeName(c.model.task_mode); },
        [](TrainConfig& c, std::string_view k, std::string_view v) {
          try {
            c.model.task_mode = ParseTaskMode(v);
          } catch (const std::exception&) {
            BadValue(k, v, "height, age, gender or multi");
          }
        }}},
      {"threads",
       {[](const TrainConfig& c) { return std::to_string(c.threads); },
        [](TrainConfig& c, std::string_view k, std::string_view v) {
          c.threads = ParseScalar<int>(k, v, "a positive integer");
        },
        true}},
      SSLPROF_PATH_FIELD("unlabeled_manifest", unlabeled_manifest),
      SSLPROF_REAL_FIELD("weight_age", weights.beta),
      SSLPROF_REAL_FIELD("weight_gender", weights.gamma),
      SSLPROF_REAL_FIELD("weight_height", weights.alpha),
  };
  return fields;
}

#undef SSLPROF_SIZE_FIELD
#undef SSLPROF_REAL_FIELD
#undef SSLPROF_BOOL_FIELD
#undef SSLPROF_PATH_FIELD
#undef SSLPROF_LIST_FIELD

const Field& FindField(std::string_view key) {
  const auto& fields = Fields();
  auto it = fields.find(key);
  if (it == fields.end()) throw ConfigError("unknown config key '" + std::string(key) + "'");
  return it->second;
}

}  // namespace

void TrainConfig::Validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError("invalid config: " + msg); };
  if (epochs < 1) fail("epochs must be >= 1");
  if (ratio < 1) fail("ratio must be >= 1");
  if (batch_size < 1) fail("batch_size must be >= 1");
  if (!(lr > 0.0)) fail("lr must be positive");
  if (weights.alpha < 0.0 || weights.beta < 0.0 || weights.gamma < 0.0) {
    fail("loss weights must be non-negative");
  }
  if (representation_weight < 0.0 || consistency_weight < 0.0) {
    fail("path weights must be non-negative");
  }
  if (!(dev_fraction >= 0.0 && dev_fraction <= 1.0)) fail("dev_fraction must lie in [0, 1]");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    fail("beta1 and beta2 must lie in [0, 1)");
  }
  if (!(adam_epsilon > 0.0)) fail("adam_epsilon must be positive");
  if (!(noise.p_apply >= 0.0 && noise.p_apply <= 1.0)) fail("augment_prob must lie in [0, 1]");
  if (noise.snr_db_min > noise.snr_db_max) fail("snr_db_min exceeds snr_db_max");
  if (threads < 1) fail("threads must be >= 1");
  try {
    model.Validate();
  } catch (const std::exception& e) {
    fail(e.what());
  }
  if (crop_len < model.MinInputLength()) {
    fail("crop_len " + std::to_string(crop_len) + " is below the minimum input length " +
         std::to_string(model.MinInputLength()));
  }
}

PathSwitches TrainConfig::Paths() const {
  PathSwitches p;
  p.representation = enable_representation;
  p.consistency = enable_consistency;
  p.representation_weight = representation_weight;
  p.consistency_weight = consistency_weight;
  p.consistency_gradient = consistency_gradient;
  return p;
}

DiffGradHyper TrainConfig::Hyper() const {
  DiffGradHyper h;
  h.lr = lr;
  h.beta1 = beta1;
  h.beta2 = beta2;
  h.epsilon = adam_epsilon;
  h.friction = friction;
  return h;
}

std::vector<std::string> ConfigKeys() {
  std::vector<std::string> keys;
  for (const auto& [k, f] : Fields()) keys.push_back(k);
  return keys;
}

void SetConfigValue(TrainConfig* config, std::string_view key, std::string_view value) {
  FindField(key).set(*config, key, Trim(value));
}

std::string GetConfigValue(const TrainConfig& config, std::string_view key) {
  return FindField(key).get(config);
}

TrainConfig ParseConfig(std::string_view text) {
  TrainConfig config;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string trimmed = Trim(line);
    if (trimmed.empty() || trimmed.front() == '#') continue;
    const auto eq = trimmed.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    try {
      SetConfigValue(&config, Trim(trimmed.substr(0, eq)), trimmed.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError("config line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return config;
}

TrainConfig LoadConfig(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return ParseConfig(buf.str());
}

std::string FormatConfig(const TrainConfig& config, bool include_execution) {
  std::string out;
  for (const auto& [key, field] : Fields()) {
    if (field.execution && !include_execution) continue;
    out += key + "=" + field.get(config) + "\n";
  }
  return out;
}

}  // namespace sslprof
