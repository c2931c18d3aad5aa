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

#ifndef SSLPROF_RECORDS_H_
#define SSLPROF_RECORDS_H_

#include <filesystem>
#include <optional>
#include <string>

namespace sslprof {

// Encoded as the binary gender target: male = 0, female = 1.
enum class Gender { kMale = 0, kFemale = 1 };

inline char GenderCode(Gender g) { return g == Gender::kMale ? 'M' : 'F'; }
inline double GenderTarget(Gender g) { return g == Gender::kMale ? 0.0 : 1.0; }

// One manifest row. Unlabeled rows carry only the path and speaker id.
struct SpeakerRecord {
  std::filesystem::path utterance_path;
  std::string speaker_id;
  std::optional<Gender> gender;
  std::optional<double> height_cm;
  std::optional<double> age_years;

  bool labeled() const {
    return gender.has_value() && height_cm.has_value() && age_years.has_value();
  }
};

}  // namespace sslprof

#endif  // SSLPROF_RECORDS_H_
