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

#ifndef SSLPROF_GRADCHECK_H_
#define SSLPROF_GRADCHECK_H_

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "sslprof/gradients.h"
#include "sslprof/model.h"

namespace sslprof {

// A scalar function of the parameters together with its analytic gradient.
// `value` reports ReLU branch decisions to the trace when one is given.
struct DifferentiableObjective {
  std::function<double(const ModelParams<double>&, ReluTrace*)> value;
  std::function<ModelParams<double>(const ModelParams<double>&)> gradient;
};

// The loss graph as a function of the parameters. With a stop-gradient
// consistency term the positive branch is pinned to `expansion_point`, the
// parameters around which the objective will be probed.
DifferentiableObjective GraphObjective(const ModelConfig& config, const LossGraph& graph,
                                       const ModelParams<double>& expansion_point);

struct FiniteDifferenceOptions {
  double epsilon = 1e-5;
  double tolerance = 1e-4;
  std::size_t samples_per_array = 6;
  std::uint64_t seed = 0;
  // Denominator floor of the relative error, so coordinates whose gradient
  // is numerically zero are judged on absolute error.
  double abs_floor = 1e-7;
  // Attempts per requested sample before giving up on an array whose
  // perturbations keep crossing ReLU kinks.
  std::size_t max_attempts_factor = 8;
  // Times the step is divided by 10 when a probe crosses a ReLU kink.
  std::size_t step_shrinks = 2;
};

struct CoordinateCheck {
  std::size_t index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double rel_error = 0.0;
  double epsilon = 0.0;  // step actually used
};

struct ArrayCheck {
  std::string name;
  std::vector<CoordinateCheck> coords;
  std::size_t kink_skips = 0;
  double max_rel_error = 0.0;
};

struct FiniteDifferenceReport {
  std::vector<ArrayCheck> arrays;
  double max_rel_error = 0.0;
  std::string worst_array;
  std::size_t checked = 0;
  std::size_t kink_skips = 0;
  double tolerance = 0.0;
  std::vector<std::string> unchecked_arrays;  // every probe crossed a kink
  bool passed = false;
};

// Central differences (f(x+e) - f(x-e)) / 2e on sampled coordinates of every
// parameter array. A probe that changes any ReLU decision (including inputs
// sitting exactly at zero) is retried with a smaller step, then the
// coordinate is excluded and another one sampled. The check fails if some
// array ends up with no checked coordinate.
FiniteDifferenceReport FiniteDifferenceCheck(const DifferentiableObjective& objective,
                                             const ModelParams<double>& params,
                                             const FiniteDifferenceOptions& options);

std::string FormatReport(const FiniteDifferenceReport& report);

// A reduced model with random waveforms and labels, used to exercise every
// loss path under the finite-difference checker.
struct GradcheckProblemOptions {
  std::size_t conv_channels = 32;
  std::size_t latent_dim = 64;
  std::size_t input_len = 16000;
  std::size_t supervised = 2;
  std::size_t triplets = 2;
  TaskMode task_mode = TaskMode::kMulti;
  std::uint64_t seed = 0;
};

struct GradcheckProblem {
  ModelConfig config;
  ModelParams<double> params;
  SupervisedBatch supervised;
  TripletWaveforms triplets;

  // Graph over this problem's batches; the problem must outlive it.
  LossGraph Graph(const PathSwitches& paths = {}, bool with_supervised = true) const;
};

GradcheckProblem MakeGradcheckProblem(const GradcheckProblemOptions& options);

}  // namespace sslprof

#endif  // SSLPROF_GRADCHECK_H_
