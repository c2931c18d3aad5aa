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

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "sslprof/config.h"
#include "sslprof/data_sampler.h"
#include "sslprof/gradcheck.h"
#include "sslprof/metrics.h"
#include "sslprof/run_manifest.h"
#include "sslprof/trainer.h"

namespace fs = std::filesystem;
using namespace sslprof;

namespace {

void WriteText(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

void Finish(RunManifest* manifest, const fs::path& out_dir) {
  manifest->finished_at = UtcNow();
  WriteRunManifest(*manifest, out_dir / "run.json");
}

struct SynthArgs {
  fs::path out_dir;
  std::uint64_t seed = 0;
  ToyCorpusConfig corpus;
};

int RunSynth(const SynthArgs& args) {
  RunManifest manifest{"synth", "", args.seed, UtcNow(), "", {}};
  const auto& c = args.corpus;
  manifest.config = "id_prefix=" + c.id_prefix + "\nlabeled_speakers=" +
                    std::to_string(c.labeled_speakers) + "\nlabeled_utterances=" +
                    std::to_string(c.labeled_utterances) + "\nmax_seconds=" +
                    FormatDouble(c.max_seconds) + "\nmin_f0_gap_hz=" +
                    FormatDouble(c.min_f0_gap_hz) + "\nmin_seconds=" +
                    FormatDouble(c.min_seconds) + "\nunlabeled_speakers=" +
                    std::to_string(c.unlabeled_speakers) + "\nunlabeled_utterances=" +
                    std::to_string(c.unlabeled_utterances) + "\n";
  Rng rng = DeriveStream(args.seed, "toy");
  const ToyCorpus corpus = GenerateToyCorpus(c, args.out_dir, rng);
  manifest.AddArtifact("labeled_manifest", corpus.labeled_manifest);
  manifest.AddArtifact("unlabeled_manifest", corpus.unlabeled_manifest);
  Finish(&manifest, args.out_dir);
  std::cout << "wrote " << corpus.labeled_manifest.string() << " and "
            << corpus.unlabeled_manifest.string() << "\n";
  return 0;
}

struct TrainArgs {
  fs::path config_path;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<fs::path> out_dir;
};

int RunTrain(const TrainArgs& args) {
  const std::string started = UtcNow();
  TrainConfig config = args.config_path.empty() ? TrainConfig{} : LoadConfig(args.config_path);
  for (const auto& kv : args.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
    SetConfigValue(&config, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (args.seed) config.seed = *args.seed;
  if (args.threads) config.threads = *args.threads;
  if (args.out_dir) config.out_dir = *args.out_dir;
  if (config.out_dir.empty()) throw ConfigError("invalid config: out_dir is required");
  config.Validate();
  fs::create_directories(config.out_dir);
  const fs::path resolved = config.out_dir / "resolved.cfg";
  WriteText(resolved, FormatConfig(config));

  TrainHooks hooks;
  hooks.on_epoch = [&](const EpochLog& row) {
    std::cout << FormatLossLogRow(row) << std::endl;
  };
  std::cout << LossLogHeader() << "\n";
  const TrainResult result = Train(config, hooks);

  RunManifest manifest{"train", FormatConfig(config), config.seed, started, "", {}};
  manifest.AddArtifact("config", resolved);
  manifest.AddArtifact("checkpoint", result.checkpoint_path);
  manifest.AddArtifact("loss_log", result.loss_log_path);
  Finish(&manifest, config.out_dir);
  std::cout << "best epoch " << result.best.epoch << " val "
            << FormatDouble(result.best.best_val_loss) << " -> "
            << result.checkpoint_path.string() << "\n";
  return 0;
}

struct InferArgs {
  fs::path checkpoint;
  fs::path manifest;
  fs::path out_dir;
  int threads = 1;
};

int RunEvaluate(const InferArgs& args) {
  RunManifest manifest{"evaluate", "", 0, UtcNow(), "", {}};
  const Checkpoint ckpt = LoadCheckpoint(args.checkpoint);
  manifest.config = FormatConfig(ckpt.config, false);
  manifest.seed = ckpt.config.seed;
  const auto records = LoadManifest(args.manifest, ManifestKind::kLabeled);
  AudioStore store(false);
  const MetricsReport report = Evaluate(ckpt, records, store, args.threads);
  fs::create_directories(args.out_dir);
  const std::string text = FormatReportText(report);
  WriteText(args.out_dir / "report.txt", text);
  WriteText(args.out_dir / "report.csv", FormatReportCsv(report));
  manifest.AddArtifact("report_text", args.out_dir / "report.txt");
  manifest.AddArtifact("report_csv", args.out_dir / "report.csv");
  Finish(&manifest, args.out_dir);
  std::cout << text;
  return 0;
}

int RunEmbed(const InferArgs& args) {
  RunManifest manifest{"embed", "", 0, UtcNow(), "", {}};
  const Checkpoint ckpt = LoadCheckpoint(args.checkpoint);
  manifest.config = FormatConfig(ckpt.config, false);
  manifest.seed = ckpt.config.seed;
  const auto records = LoadManifest(args.manifest, ManifestKind::kUnlabeled);
  AudioStore store(false);
  const auto rows = ExportEmbeddings(ckpt, records, store, args.threads);
  fs::create_directories(args.out_dir);
  const fs::path out = args.out_dir / "embeddings.csv";
  WriteEmbeddings(out, rows);
  manifest.AddArtifact("embeddings", out);
  Finish(&manifest, args.out_dir);
  std::cout << "wrote " << rows.size() << " embeddings to " << out.string() << "\n";
  return 0;
}

struct GradcheckArgs {
  GradcheckProblemOptions problem;
  FiniteDifferenceOptions fd;
  bool symmetric = false;
  fs::path out_dir;
};

int RunGradcheck(GradcheckArgs args) {
  RunManifest manifest{"gradcheck", "", args.problem.seed, UtcNow(), "", {}};
  args.fd.seed = args.problem.seed;
  const GradcheckProblem problem = MakeGradcheckProblem(args.problem);
  PathSwitches paths;
  if (args.symmetric) paths.consistency_gradient = ConsistencyGradient::kSymmetric;
  const LossGraph graph = problem.Graph(paths);
  const FiniteDifferenceReport report =
      FiniteDifferenceCheck(GraphObjective(problem.config, graph, problem.params), problem.params, args.fd);
  const std::string text = FormatReport(report);
  std::cout << text;
  if (!args.out_dir.empty()) {
    fs::create_directories(args.out_dir);
    WriteText(args.out_dir / "gradcheck.txt", text);
    manifest.config = "conv_channels=" + std::to_string(args.problem.conv_channels) +
                      "\nepsilon=" + FormatDouble(args.fd.epsilon) +
                      "\ninput_len=" + std::to_string(args.problem.input_len) +
                      "\nlatent_dim=" + std::to_string(args.problem.latent_dim) +
                      "\nsamples_per_array=" + std::to_string(args.fd.samples_per_array) +
                      "\nsymmetric=" + (args.symmetric ? "true" : "false") +
                      "\ntolerance=" + FormatDouble(args.fd.tolerance) + "\n";
    manifest.AddArtifact("report", args.out_dir / "gradcheck.txt");
    Finish(&manifest, args.out_dir);
  }
  return report.passed ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Semi-supervised speaker profiling from raw waveforms"};
  app.require_subcommand(1);

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic toy corpus");
  synth_cmd->add_option("--out-dir", synth.out_dir, "Output directory")->required();
  synth_cmd->add_option("--seed", synth.seed, "Root seed");
  synth_cmd->add_option("--labeled-speakers", synth.corpus.labeled_speakers, "Labeled speakers");
  synth_cmd->add_option("--labeled-utterances", synth.corpus.labeled_utterances,
                       "Utterances per labeled speaker");
  synth_cmd->add_option("--unlabeled-speakers", synth.corpus.unlabeled_speakers,
                       "Unlabeled speakers");
  synth_cmd->add_option("--unlabeled-utterances", synth.corpus.unlabeled_utterances,
                       "Utterances per unlabeled speaker");
  synth_cmd->add_option("--min-seconds", synth.corpus.min_seconds, "Shortest utterance");
  synth_cmd->add_option("--max-seconds", synth.corpus.max_seconds, "Longest utterance");
  synth_cmd->add_option("--id-prefix", synth.corpus.id_prefix, "Speaker id prefix");

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "Train a model");
  train_cmd->add_option("--config", train.config_path, "key = value config file")
      ->check(CLI::ExistingFile);
  train_cmd->add_option("--set", train.overrides, "Override one config key (key=value)");
  train_cmd->add_option("--seed", train.seed, "Root seed");
  train_cmd->add_option("--threads", train.threads, "Worker threads");
  train_cmd->add_option("--out-dir", train.out_dir, "Output directory");

  InferArgs eval;
  auto* eval_cmd = app.add_subcommand("evaluate", "Grouped metrics on a labeled manifest");
  eval_cmd->add_option("--checkpoint", eval.checkpoint, "Checkpoint file")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--manifest", eval.manifest, "Labeled manifest")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--out-dir", eval.out_dir, "Output directory")->required();
  eval_cmd->add_option("--threads", eval.threads, "Worker threads");

  InferArgs embed;
  auto* embed_cmd = app.add_subcommand("embed", "Export latent codes for a manifest");
  embed_cmd->add_option("--checkpoint", embed.checkpoint, "Checkpoint file")->required()->check(CLI::ExistingFile);
  embed_cmd->add_option("--manifest", embed.manifest, "Labeled or unlabeled manifest")->required()->check(CLI::ExistingFile);
  embed_cmd->add_option("--out-dir", embed.out_dir, "Output directory")->required();
  embed_cmd->add_option("--threads", embed.threads, "Worker threads");

  GradcheckArgs grad;
  auto* grad_cmd = app.add_subcommand("gradcheck", "Finite-difference gradient check");
  grad_cmd->add_option("--tolerance", grad.fd.tolerance, "Max relative error");
  grad_cmd->add_option("--epsilon", grad.fd.epsilon, "Central-difference step");
  grad_cmd->add_option("--samples", grad.fd.samples_per_array, "Coordinates per array");
  grad_cmd->add_option("--seed", grad.problem.seed, "Seed for weights, data and sampling");
  grad_cmd->add_option("--channels", grad.problem.conv_channels, "Conv channels");
  grad_cmd->add_option("--latent", grad.problem.latent_dim, "Latent size");
  grad_cmd->add_option("--input-len", grad.problem.input_len, "Samples per input");
  grad_cmd->add_flag("--symmetric", grad.symmetric, "Symmetric consistency gradient");
  grad_cmd->add_option("--out-dir", grad.out_dir, "Write gradcheck.txt and run.json here");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*synth_cmd) return RunSynth(synth);
    if (*train_cmd) return RunTrain(train);
    if (*eval_cmd) return RunEvaluate(eval);
    if (*embed_cmd) return RunEmbed(embed);
    if (*grad_cmd) return RunGradcheck(grad);
  } catch (const std::exception& e) {
    std::cerr << "sslprof: error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
