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

#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "sslprof/trainer.h"

namespace sslprof {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

namespace {

constexpr char kMagic[4] = {'S', 'S', 'L', 'P'};

template <typename T>
void Put(std::string* out, T value) {
  char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  out->append(buf, sizeof(T));
}

void PutText(std::string* out, std::string_view text) {
  Put<std::uint64_t>(out, text.size());
  out->append(text);
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  bool Has(std::size_t n) const { return bytes_.size() - pos_ >= n; }
  std::size_t remaining() const { return bytes_.size() - pos_; }

  template <typename T>
  bool Get(T* value) {
    if (!Has(sizeof(T))) return false;
    std::memcpy(value, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return true;
  }

  bool GetBytes(std::size_t n, std::string_view* out) {
    if (!Has(n)) return false;
    *out = bytes_.substr(pos_, n);
    pos_ += n;
    return true;
  }

  bool GetText(std::string_view* out) {
    std::uint64_t n = 0;
    return Get(&n) && GetBytes(n, out);
  }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

std::string FormatStats(const Checkpoint& c) {
  std::string out;
  out += "age_mean=" + FormatDouble(c.stats.age_mean) + "\n";
  out += "age_std=" + FormatDouble(c.stats.age_std) + "\n";
  out += "best_val_loss=" + FormatDouble(c.best_val_loss) + "\n";
  out += "epoch=" + std::to_string(c.epoch) + "\n";
  out += "height_mean=" + FormatDouble(c.stats.height_mean) + "\n";
  out += "height_std=" + FormatDouble(c.stats.height_std) + "\n";
  return out;
}

void ParseStats(std::string_view text, Checkpoint* c) {
  std::map<std::string, std::string> kv;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw CheckpointError("corrupt stats block: '" + line + "'");
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  auto number = [&](const std::string& key) {
    auto it = kv.find(key);
    if (it == kv.end()) throw CheckpointError("stats block is missing '" + key + "'");
    try {
      std::size_t used = 0;
      const double v = std::stod(it->second, &used);
      if (used != it->second.size()) throw std::invalid_argument(key);
      return v;
    } catch (const std::exception&) {
      throw CheckpointError("stats block has a malformed '" + key + "'");
    }
  };
  c->stats.age_mean = number("age_mean");
  c->stats.age_std = number("age_std");
  c->best_val_loss = number("best_val_loss");
  c->epoch = static_cast<std::uint64_t>(number("epoch"));
  c->stats.height_mean = number("height_mean");
  c->stats.height_std = number("height_std");
}

}  // namespace

std::string SerializeCheckpoint(const Checkpoint& checkpoint) {
  CheckShapes(checkpoint.params, checkpoint.config.model);
  std::string out(kMagic, sizeof(kMagic));
  Put<std::uint32_t>(&out, checkpoint.version);
  PutText(&out, FormatConfig(checkpoint.config, /*include_execution=*/false));
  PutText(&out, FormatStats(checkpoint));
  for (const auto& [name, tensor] : checkpoint.params.Named()) {
    PutText(&out, name);
    Put<std::uint64_t>(&out, tensor->rank());
    for (std::size_t d : tensor->shape) Put<std::uint64_t>(&out, d);
    out.append(reinterpret_cast<const char*>(tensor->data.data()),
               tensor->data.size() * sizeof(float));
  }
  return out;
}

Checkpoint ParseCheckpoint(std::string_view bytes) {
  if (bytes.size() < sizeof(kMagic) || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    throw CheckpointError("not a checkpoint (bad magic bytes)");
  }
  Reader in(bytes.substr(sizeof(kMagic)));
  Checkpoint c;
  if (!in.Get(&c.version)) throw CheckpointError("truncated checkpoint header");
  if (c.version != kCheckpointVersion) {
    throw CheckpointError("checkpoint version mismatch: file has " + std::to_string(c.version) +
                          ", expected " + std::to_string(kCheckpointVersion));
  }
  std::string_view config_text, stats_text;
  if (!in.GetText(&config_text)) throw CheckpointError("truncated checkpoint config block");
  if (!in.GetText(&stats_text)) throw CheckpointError("truncated checkpoint stats block");
  try {
    c.config = ParseConfig(config_text);
    c.config.model.Validate();
  } catch (const std::exception& e) {
    throw CheckpointError(std::string("corrupt checkpoint config: ") + e.what());
  }
  ParseStats(stats_text, &c);

  Rng shapes_only(0);
  c.params = InitParams<float>(c.config.model, shapes_only);
  for (auto& [name, tensor] : c.params.Named()) {
    const std::string where = "parameter '" + name + "'";
    std::string_view file_name;
    if (!in.GetText(&file_name)) throw CheckpointError("truncated checkpoint at " + where);
    if (file_name != name) {
      throw CheckpointError("checkpoint has parameter '" + std::string(file_name) +
                            "' where " + where + " was expected");
    }
    std::uint64_t rank = 0;
    if (!in.Get(&rank)) throw CheckpointError("truncated checkpoint at " + where);
    if (rank > 8) throw CheckpointError("implausible rank for " + where);
    std::vector<std::size_t> shape(rank);
    for (auto& d : shape) {
      std::uint64_t dim = 0;
      if (!in.Get(&dim)) throw CheckpointError("truncated checkpoint at " + where);
      d = dim;
    }
    if (shape != tensor->shape) {
      throw CheckpointError("shape mismatch for " + where + ": file has " + ShapeString(shape) +
                            ", config implies " + ShapeString(tensor->shape));
    }
    std::string_view raw;
    if (!in.GetBytes(tensor->size() * sizeof(float), &raw)) {
      throw CheckpointError("truncated checkpoint: data of " + where + " is incomplete");
    }
    std::memcpy(tensor->data.data(), raw.data(), raw.size());
  }
  if (in.remaining() != 0) {
    throw CheckpointError("checkpoint has " + std::to_string(in.remaining()) +
                          " trailing bytes after the last parameter");
  }
  return c;
}

void SaveCheckpoint(const Checkpoint& checkpoint, const std::filesystem::path& path) {
  const std::string bytes = SerializeCheckpoint(checkpoint);
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw CheckpointError("cannot write checkpoint: " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw CheckpointError("failed writing checkpoint: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

namespace {

std::string ReadFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

Checkpoint LoadCheckpoint(const std::filesystem::path& path) {
  try {
    return ParseCheckpoint(ReadFile(path));
  } catch (const CheckpointError& e) {
    throw CheckpointError(path.string() + ": " + e.what());
  }
}

std::string Fnv1aHex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string FileDigest(const std::filesystem::path& path) { return Fnv1aHex(ReadFile(path)); }

}  // namespace sslprof
