// Copyright 2026 The vqlab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// End-to-end experiment plumbing: evaluation of a trained model, sweep plans
// over bottleneck conditions and the F0 anonymization study.

#ifndef VQLAB_EXPERIMENT_H_
#define VQLAB_EXPERIMENT_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "vqlab/config.h"
#include "vqlab/corpus.h"
#include "vqlab/metrics.h"
#include "vqlab/model.h"
#include "vqlab/probe.h"

namespace vqlab {

inline constexpr char kArtifactVersion[] = "vqlab 0.1.0";

// Everything the metrics of one report are computed from. Embeddings are
// mean-pooled utterance features (not normalized), one row per utterance.
struct EvalArtifacts {
  Matrix train_embeddings;
  std::vector<int> train_speakers;
  Matrix eval_embeddings;
  std::vector<int> eval_speakers;
  ScoreSet scores;
  ContentCounts content;
};

struct EvalOptions {
  FeatureTap tap = FeatureTap::kPostVq;
  uint64_t trial_seed = 1;
  ProbeConfig probe;
  int linkability_bins = kDefaultLinkabilityBins;
};

// [eval] section: tap, trial_seed, probe_*, linkability_bins.
EvalOptions EvalOptionsFromKeyValues(const KeyValueConfig& cfg);
void EvalOptionsToKeyValues(const EvalOptions& options, KeyValueConfig& cfg);

// Extracts features for both splits, measures content error on the eval
// split and scores eval trials. Cosine scores use embeddings centred on the
// train-split mean.
EvalArtifacts CollectArtifacts(const BottleneckModel& model, const Corpus& corpus,
                               const CorpusSplit& split, const EvalOptions& options);

// Pure function of the artifacts: probe fitted on the train embeddings and
// scored on the eval embeddings, EER and d_sys from the trial scores.
MetricsReport ReportFromArtifacts(const std::string& condition,
                                  std::optional<int> codebook_size,
                                  const EvalArtifacts& artifacts,
                                  int num_speakers, const KeyValueConfig& echo,
                                  uint64_t seed, const EvalOptions& options);

// Artifact dump: embeddings as "speaker v1 ... vD" lines, one score file per
// trial type and the content counts. Numbers round-trip exactly.
void SaveArtifacts(const EvalArtifacts& artifacts, const std::string& dir);
EvalArtifacts LoadArtifacts(const std::string& dir);

// Recomputes a report from a run directory written by the sweep.
MetricsReport Rederive(const std::string& run_dir);

struct ConditionSpec {
  std::string name;
  std::optional<int> codebook_size;
  int encoder_depth = 3;
  double beta = kDefaultBeta;
  std::vector<uint64_t> seeds;
};

struct F0Plan {
  bool shift_to_common_target = false;
  std::optional<double> awgn_snr_db;
  double target_mean = 150.0;
  double target_std = 20.0;

  bool enabled() const { return shift_to_common_target || awgn_snr_db.has_value(); }
};

// Plan file layout:
//
//   [corpus]            corpus generation settings
//   [model]             defaults shared by every condition
//   [eval]              tap = pre_vq | post_vq
//   [condition.NAME]    codebook_size, encoder_depth, beta, seeds = 1,2,3
//   [f0]                shift_to_common_target, awgn_snr_db, target_mean, ...
//
// Conditions run in file order. Each seed selects the corpus, the split and
// the model initialization.
struct ExperimentPlan {
  CorpusConfig corpus;
  ModelConfig model;
  EvalOptions eval;
  std::vector<ConditionSpec> conditions;
  F0Plan f0;

  void Validate() const;  // throws ConfigError
};

ExperimentPlan ParsePlan(const KeyValueConfig& cfg);
ExperimentPlan LoadPlan(const std::string& path);
KeyValueConfig PlanToKeyValues(const ExperimentPlan& plan);

// The benchmark plan: no-VQ, V = 256, 128, 64, seeds 1-3 each.
ExperimentPlan DefaultPlan();

// Corpus and model settings of one (condition, seed) run.
CorpusConfig RunCorpusConfig(const ExperimentPlan& plan, uint64_t seed);
ModelConfig RunModelConfig(const ExperimentPlan& plan,
                           const ConditionSpec& condition, uint64_t seed);

struct RunFailure {
  std::string condition;
  uint64_t seed = 0;
  std::string message;
};

struct F0Result {
  uint64_t seed = 0;
  double probe_original = 0.0;
  double probe_shifted = 0.0;
  std::optional<double> probe_noisy;
  std::optional<double> measured_snr_db;
  double chance = 0.0;
};

struct SweepResult {
  std::vector<MetricsReport> reports;  // plan order
  std::vector<RunFailure> failures;
  std::vector<F0Result> f0;
  std::string version = kArtifactVersion;
  std::string timestamp;
};

// Runs gen -> train -> eval for every (condition, seed). With a non-empty
// out_dir writes per-run directories, results.csv, failures.txt,
// f0_table.csv and provenance.txt there.
SweepResult RunSweep(const ExperimentPlan& plan, const std::string& out_dir);

// Reproducible timestamp: SOURCE_DATE_EPOCH when set, otherwise "unset".
std::string ProvenanceTimestamp();

// One F0 track per utterance, seeded by (corpus seed, utterance id).
std::vector<F0Track> GenerateCorpusF0(const Corpus& corpus);

// Speaker probe on per-utterance F0 (mean, std): on the original tracks,
// after shifting every track to the plan target, and after adding noise.
F0Result EvaluateF0(const Corpus& corpus, const CorpusSplit& split,
                    const F0Plan& plan, uint64_t seed,
                    const ProbeConfig& probe = {});

}  // namespace vqlab

#endif  // VQLAB_EXPERIMENT_H_
