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

#include "sslprof/run_manifest.h"

#include <chrono>
#include <ctime>
#include <fstream>
#include <stdexcept>

#include "json.hpp"
#include "sslprof/trainer.h"

namespace sslprof {

void RunManifest::AddArtifact(const std::string& name, const std::filesystem::path& path) {
  artifacts.push_back({name, path, FileDigest(path)});
}

std::string UtcNow() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void WriteRunManifest(const RunManifest& manifest, const std::filesystem::path& path) {
  nlohmann::ordered_json j;
  j["command"] = manifest.command;
  j["seed"] = manifest.seed;
  j["started_at"] = manifest.started_at;
  j["finished_at"] = manifest.finished_at;
  j["config"] = manifest.config;
  j["artifacts"] = nlohmann::ordered_json::array();
  for (const auto& a : manifest.artifacts) {
    j["artifacts"].push_back(
        {{"name", a.name}, {"path", a.path.generic_string()}, {"fnv1a64", a.digest}});
  }
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write run manifest: " + tmp.string());
    out << j.dump(2) << "\n";
    if (!out) throw std::runtime_error("failed writing run manifest: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

RunManifest ReadRunManifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open run manifest: " + path.string());
  const auto j = nlohmann::json::parse(in);
  RunManifest m;
  m.command = j.at("command").get<std::string>();
  m.seed = j.at("seed").get<std::uint64_t>();
  m.started_at = j.at("started_at").get<std::string>();
  m.finished_at = j.at("finished_at").get<std::string>();
  m.config = j.at("config").get<std::string>();
  for (const auto& a : j.at("artifacts")) {
    m.artifacts.push_back({a.at("name").get<std::string>(),
                           std::filesystem::path(a.at("path").get<std::string>()),
                           a.at("fnv1a64").get<std::string>()});
  }
  return m;
}

}  // namespace sslprof
