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

#ifndef SSLPROF_METRICS_H_
#define SSLPROF_METRICS_H_

#include <cstddef>
#include <optional>
#include <span>
#include <string>

#include "sslprof/records.h"

namespace sslprof {

double Rmse(std::span<const double> preds, std::span<const double> targets);
double Mae(std::span<const double> preds, std::span<const double> targets);

// Fraction of rows where (prob >= threshold) agrees with the binary target.
double Accuracy(std::span<const double> probs, std::span<const double> targets,
                double threshold = 0.5);

struct PhysicalPrediction {
  double height_cm = 0.0;
  double age_years = 0.0;
  double gender_prob = 0.0;  // probability of female
};

struct PhysicalTarget {
  double height_cm = 0.0;
  double age_years = 0.0;
  Gender gender = Gender::kMale;
};

// Which heads a report covers; single-task models leave the others absent.
struct MetricSelection {
  bool height = true;
  bool age = true;
  bool gender = true;
};

struct GroupMetrics {
  std::size_t count = 0;
  std::optional<double> rmse_height;
  std::optional<double> mae_height;
  std::optional<double> rmse_age;
  std::optional<double> mae_age;
  std::optional<double> gender_accuracy;
};

// Groups are formed by ground-truth gender. A group with no members is absent.
struct MetricsReport {
  std::optional<GroupMetrics> male;
  std::optional<GroupMetrics> female;
  std::optional<GroupMetrics> overall;
};

MetricsReport GroupedReport(std::span<const PhysicalPrediction> preds,
                            std::span<const PhysicalTarget> targets,
                            const MetricSelection& selection = {});

// Aligned table with one row per group: height RMSE/MAE, age RMSE/MAE,
// gender accuracy, count.
std::string FormatReportText(const MetricsReport& report);
std::string FormatReportCsv(const MetricsReport& report);

}  // namespace sslprof

#endif  // SSLPROF_METRICS_H_
