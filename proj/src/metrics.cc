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

#include "sslprof/metrics.h"

#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <vector>

namespace sslprof {

namespace {

void CheckPair(std::span<const double> a, std::span<const double> b) {
  if (a.empty()) throw std::invalid_argument("metric over empty input");
  if (a.size() != b.size()) throw std::invalid_argument("metric inputs differ in length");
}

GroupMetrics ComputeGroup(const std::vector<const PhysicalPrediction*>& preds,
                          const std::vector<const PhysicalTarget*>& targets,
                          const MetricSelection& sel) {
  GroupMetrics g;
  g.count = preds.size();
  std::vector<double> hp, ht, ap, at, gp, gt;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    hp.push_back(preds[i]->height_cm);
    ht.push_back(targets[i]->height_cm);
    ap.push_back(preds[i]->age_years);
    at.push_back(targets[i]->age_years);
    gp.push_back(preds[i]->gender_prob);
    gt.push_back(GenderTarget(targets[i]->gender));
  }
  if (sel.height) {
    g.rmse_height = Rmse(hp, ht);
    g.mae_height = Mae(hp, ht);
  }
  if (sel.age) {
    g.rmse_age = Rmse(ap, at);
    g.mae_age = Mae(ap, at);
  }
  if (sel.gender) g.gender_accuracy = Accuracy(gp, gt);
  return g;
}

std::string Cell(const std::optional<double>& v, const char* fmt) {
  if (!v) return "-";
  char buf[64];
  std::snprintf(buf, sizeof(buf), fmt, *v);
  return buf;
}

}  // namespace

double Rmse(std::span<const double> preds, std::span<const double> targets) {
  CheckPair(preds, targets);
  double acc = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const double d = preds[i] - targets[i];
    acc += d * d;
  }
  return std::sqrt(acc / static_cast<double>(preds.size()));
}

double Mae(std::span<const double> preds, std::span<const double> targets) {
  CheckPair(preds, targets);
  double acc = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) acc += std::abs(preds[i] - targets[i]);
  return acc / static_cast<double>(preds.size());
}

double Accuracy(std::span<const double> probs, std::span<const double> targets,
                double threshold) {
  CheckPair(probs, targets);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const double predicted = probs[i] >= threshold ? 1.0 : 0.0;
    if (predicted == targets[i]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(probs.size());
}

MetricsReport GroupedReport(std::span<const PhysicalPrediction> preds,
                            std::span<const PhysicalTarget> targets,
                            const MetricSelection& selection) {
  if (preds.size() != targets.size()) {
    throw std::invalid_argument("predictions and targets differ in length");
  }
  std::vector<const PhysicalPrediction*> mp, fp, ap;
  std::vector<const PhysicalTarget*> mt, ft, at;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    auto& p = targets[i].gender == Gender::kMale ? mp : fp;
    auto& t = targets[i].gender == Gender::kMale ? mt : ft;
    p.push_back(&preds[i]);
    t.push_back(&targets[i]);
    ap.push_back(&preds[i]);
    at.push_back(&targets[i]);
  }
  MetricsReport report;
  if (!mp.empty()) report.male = ComputeGroup(mp, mt, selection);
  if (!fp.empty()) report.female = ComputeGroup(fp, ft, selection);
  if (!ap.empty()) report.overall = ComputeGroup(ap, at, selection);
  return report;
}

std::string FormatReportText(const MetricsReport& report) {
  std::string out;
  char line[160];
  std::snprintf(line, sizeof(line), "%-6s %11s %11s %11s %11s %11s %6s\n", "group",
                "height_rmse", "height_mae", "age_rmse", "age_mae", "gender_acc", "n");
  out += line;
  auto row = [&](const char* name, const std::optional<GroupMetrics>& g) {
    if (!g) {
      std::snprintf(line, sizeof(line), "%-6s %11s %11s %11s %11s %11s %6s\n", name, "-", "-",
                    "-", "-", "-", "0");
    } else {
      std::snprintf(line, sizeof(line), "%-6s %11s %11s %11s %11s %11s %6zu\n", name,
                    Cell(g->rmse_height, "%.2f").c_str(), Cell(g->mae_height, "%.2f").c_str(),
                    Cell(g->rmse_age, "%.2f").c_str(), Cell(g->mae_age, "%.2f").c_str(),
                    Cell(g->gender_accuracy, "%.4f").c_str(), g->count);
    }
    out += line;
  };
  row("M", report.male);
  row("F", report.female);
  row("all", report.overall);
  return out;
}

std::string FormatReportCsv(const MetricsReport& report) {
  std::string out = "group,height_rmse,height_mae,age_rmse,age_mae,gender_accuracy,count\n";
  auto row = [&](const char* name, const std::optional<GroupMetrics>& g) {
    out += name;
    if (!g) {
      out += ",,,,,,0\n";
      return;
    }
    for (const auto& v : {g->rmse_height, g->mae_height, g->rmse_age, g->mae_age,
                          g->gender_accuracy}) {
      out += "," + (v ? Cell(v, "%.17g") : std::string());
    }
    out += "," + std::to_string(g->count) + "\n";
  };
  row("M", report.male);
  row("F", report.female);
  row("all", report.overall);
  return out;
}

}  // namespace sslprof
