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

#include "sslprof/gradcheck.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <sstream>
#include <stdexcept>

#include "sslprof/rng.h"

namespace sslprof {

DifferentiableObjective GraphObjective(const ModelConfig& config, const LossGraph& graph,
                                       const ModelParams<double>& expansion_point) {
  LossGraph probed = graph;
  std::shared_ptr<const ModelParams<double>> pinned;
  if (graph.paths.consistency &&
      graph.paths.consistency_gradient == ConsistencyGradient::kStopGradient) {
    pinned = std::make_shared<const ModelParams<double>>(expansion_point);
    probed.consistency_reference = pinned.get();
  }
  DifferentiableObjective obj;
  obj.value = [config, probed, pinned](const ModelParams<double>& p, ReluTrace* trace) {
    return EvaluateLoss<double>(p, config, probed, trace);
  };
  obj.gradient = [config, graph](const ModelParams<double>& p) {
    return ParameterGradients<double>(p, config, graph).grads;
  };
  return obj;
}

FiniteDifferenceReport FiniteDifferenceCheck(const DifferentiableObjective& objective,
                                             const ModelParams<double>& params,
                                             const FiniteDifferenceOptions& options) {
  if (!(options.epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
  FiniteDifferenceReport report;
  report.tolerance = options.tolerance;

  const ModelParams<double> analytic = objective.gradient(params);
  ReluTrace base_trace;
  objective.value(params, &base_trace);

  ModelParams<double> probe = params;
  auto probe_named = probe.Named();
  const auto grad_named = analytic.Named();
  Rng rng = DeriveStream(options.seed, "gradcheck");

  for (std::size_t a = 0; a < probe_named.size(); ++a) {
    Tensor<double>& tensor = *probe_named[a].tensor;
    ArrayCheck check;
    check.name = probe_named[a].name;
    const std::size_t want = std::min(options.samples_per_array, tensor.size());
    std::uniform_int_distribution<std::size_t> pick(0, tensor.size() - 1);
    std::vector<bool> used(tensor.size(), false);
    const std::size_t max_attempts = want * options.max_attempts_factor;
    for (std::size_t attempt = 0; check.coords.size() < want && attempt < max_attempts;
         ++attempt) {
      const std::size_t idx = tensor.size() <= want ? attempt : pick(rng);
      if (idx >= tensor.size() || used[idx]) continue;
      used[idx] = true;
      // Shrink the step when a probe crosses a ReLU kink; skip the
      // coordinate if even the smallest step crosses one.
      const double original = tensor[idx];
      double step = options.epsilon;
      double f_plus = 0.0, f_minus = 0.0;
      bool smooth = false;
      for (std::size_t s = 0; s < options.step_shrinks + 1 && !smooth; ++s, step *= 0.1) {
        ReluTrace plus_trace, minus_trace;
        tensor[idx] = original + step;
        f_plus = objective.value(probe, &plus_trace);
        tensor[idx] = original - step;
        f_minus = objective.value(probe, &minus_trace);
        tensor[idx] = original;
        smooth = plus_trace.hash() == base_trace.hash() &&
                 minus_trace.hash() == base_trace.hash();
        if (smooth) break;
      }
      if (!smooth) {
        ++check.kink_skips;
        continue;
      }
      CoordinateCheck c;
      c.index = idx;
      c.analytic = (*grad_named[a].tensor)[idx];
      c.numeric = (f_plus - f_minus) / (2.0 * step);
      c.epsilon = step;
      const double denom =
          std::max({std::abs(c.analytic), std::abs(c.numeric), options.abs_floor});
      c.rel_error = std::abs(c.analytic - c.numeric) / denom;
      check.max_rel_error = std::max(check.max_rel_error, c.rel_error);
      check.coords.push_back(c);
    }
    report.checked += check.coords.size();
    report.kink_skips += check.kink_skips;
    if (check.max_rel_error >= report.max_rel_error) {
      report.max_rel_error = check.max_rel_error;
      report.worst_array = check.name;
    }
    report.arrays.push_back(std::move(check));
  }
  for (const auto& a : report.arrays) {
    if (a.coords.empty()) report.unchecked_arrays.push_back(a.name);
  }
  report.passed = report.checked > 0 && report.unchecked_arrays.empty() &&
                  report.max_rel_error < options.tolerance;
  return report;
}

std::string FormatReport(const FiniteDifferenceReport& report) {
  std::ostringstream out;
  char line[256];
  for (const auto& a : report.arrays) {
    std::snprintf(line, sizeof(line), "  %-32s checked %3zu  kink-skips %2zu  max rel err %.3e\n",
                  a.name.c_str(), a.coords.size(), a.kink_skips, a.max_rel_error);
    out << line;
  }
  std::snprintf(line, sizeof(line),
                "%s: max relative error %.3e (%s) over %zu coordinates, tolerance %.1e\n",
                report.passed ? "PASS" : "FAIL", report.max_rel_error,
                report.worst_array.c_str(), report.checked, report.tolerance);
  out << line;
  for (const auto& name : report.unchecked_arrays) {
    out << "  no kink-free coordinate found in " << name << "\n";
  }
  return out.str();
}

LossGraph GradcheckProblem::Graph(const PathSwitches& paths, bool with_supervised) const {
  LossGraph graph;
  graph.supervised = with_supervised ? &supervised : nullptr;
  graph.triplets = &triplets;
  graph.paths = paths;
  return graph;
}

GradcheckProblem MakeGradcheckProblem(const GradcheckProblemOptions& options) {
  GradcheckProblem p;
  p.config.conv_channels = options.conv_channels;
  p.config.latent_dim = options.latent_dim;
  p.config.task_mode = options.task_mode;
  p.config.Validate();
  Rng init = DeriveStream(options.seed, "init");
  p.params = InitParams<double>(p.config, init);

  Rng data = DeriveStream(options.seed, "data");
  std::normal_distribution<float> audio(0.0f, 0.3f);
  std::normal_distribution<double> label(0.0, 1.0);
  std::bernoulli_distribution coin(0.5);
  auto wave = [&] {
    std::vector<float> w(options.input_len);
    for (auto& x : w) x = audio(data);
    return w;
  };
  for (std::size_t i = 0; i < options.supervised; ++i) {
    p.supervised.waveforms.push_back(wave());
    p.supervised.targets.push_back({label(data), label(data), coin(data) ? 1.0 : 0.0});
  }
  for (std::size_t i = 0; i < options.triplets; ++i) {
    p.triplets.anchors.push_back(wave());
    p.triplets.positives.push_back(wave());
    p.triplets.negatives.push_back(wave());
  }
  return p;
}

}  // namespace sslprof
