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

#ifndef SSLPROF_RUN_MANIFEST_H_
#define SSLPROF_RUN_MANIFEST_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace sslprof {

struct RunArtifact {
  std::string name;
  std::filesystem::path path;
  std::string digest;  // FNV-1a 64 of the file contents
};

// Record of one command invocation, written as JSON once the run finishes.
struct RunManifest {
  std::string command;
  std::string config;  // canonical key=value text
  std::uint64_t seed = 0;
  std::string started_at;
  std::string finished_at;
  std::vector<RunArtifact> artifacts;

  // Adds `path` and its digest. The file must already exist.
  void AddArtifact(const std::string& name, const std::filesystem::path& path);
};

// ISO-8601 UTC, second resolution.
std::string UtcNow();

// Writes to a sibling temporary file and renames it into place.
void WriteRunManifest(const RunManifest& manifest, const std::filesystem::path& path);
RunManifest ReadRunManifest(const std::filesystem::path& path);

}  // namespace sslprof

#endif  // SSLPROF_RUN_MANIFEST_H_
