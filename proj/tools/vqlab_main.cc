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

// vqlab command line: gen-data, train, eval, sweep, f0.
//
// Exit codes: 0 success, 2 invalid input or configuration, 3 numerical or
// runtime failure.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "vqlab/binary_io.h"
#include "vqlab/config.h"
#include "vqlab/corpus.h"
#include "vqlab/experiment.h"
#include "vqlab/f0.h"
#include "vqlab/metrics.h"
#include "vqlab/model.h"

namespace {

namespace fs = std::filesystem;

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitRuntime = 3;

// Input problems that are not exceptions of their own.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

vqlab::KeyValueConfig LoadOptionalConfig(const std::string& path) {
  if (path.empty()) return {};
  if (!fs::exists(path)) throw InputError("config file not found: " + path);
  return vqlab::KeyValueConfig::Load(path);
}

void RequireDir(const std::string& path, const std::string& what) {
  if (!fs::is_directory(path)) throw InputError(what + " not found: " + path);
}

void RequireFile(const std::string& path, const std::string& what) {
  if (!fs::is_regular_file(path)) throw InputError(what + " not found: " + path);
}

std::string Losses(const vqlab::LossBreakdown& l) {
  return "task=" + vqlab::FormatDouble(l.task_loss) +
         " l_vq=" + vqlab::FormatDouble(l.l_vq) +
         " l_vq_reg=" + vqlab::FormatDouble(l.l_vq_reg) +
         " total=" + vqlab::FormatDouble(l.total);
}

struct GenDataArgs {
  std::string config;
  std::string out;
  std::optional<uint64_t> seed;
};

int GenData(const GenDataArgs& args) {
  vqlab::CorpusConfig config =
      vqlab::CorpusConfigFromKeyValues(LoadOptionalConfig(args.config));
  if (args.seed) config.seed = *args.seed;
  config.Validate();
  const vqlab::Corpus corpus = vqlab::GenerateCorpus(config);
  vqlab::SaveCorpus(corpus, args.out);
  std::cout << "wrote " << corpus.utterances.size() << " utterances from "
            << corpus.speakers.size() << " speakers to " << args.out << '\n';
  return kExitOk;
}

struct TrainArgs {
  std::string corpus;
  std::string config;
  std::string out;
  std::optional<uint64_t> seed;
};

int Train(const TrainArgs& args) {
  RequireDir(args.corpus, "corpus directory");
  vqlab::ModelConfig config =
      vqlab::ModelConfigFromKeyValues(LoadOptionalConfig(args.config));
  if (args.seed) config.seed = *args.seed;
  config.Validate();
  const vqlab::Corpus corpus = vqlab::LoadCorpus(args.corpus);
  const vqlab::CorpusSplit split =
      vqlab::SplitCorpus(corpus, config.train_fraction, corpus.config.seed);
  vqlab::BottleneckModel model(config, corpus.config.frame_dim,
                               corpus.config.num_content_classes);
  const std::vector<vqlab::StepRecord> history =
      vqlab::Train(model, corpus, split.train);
  fs::create_directories(args.out);
  vqlab::SaveCheckpoint((fs::path(args.out) / "model.ckpt").string(), model);
  std::ofstream loss(fs::path(args.out) / "loss.csv");
  vqlab::WriteLossHistoryCsv(loss, history);
  if (!loss) throw std::runtime_error("failed writing loss history");
  std::cout << "trained " << history.size() << " steps; final "
            << Losses(history.back().loss) << '\n';
  return kExitOk;
}

struct EvalArgs {
  std::string checkpoint;
  std::string corpus;
  std::string config;
  std::string out;
  std::string condition = "eval";
  std::string tap;
  std::optional<uint64_t> seed;
  bool dump_features = false;
};

int Eval(const EvalArgs& args) {
  RequireFile(args.checkpoint, "checkpoint");
  RequireDir(args.corpus, "corpus directory");
  vqlab::KeyValueConfig cfg = LoadOptionalConfig(args.config);
  if (!args.tap.empty()) cfg.Set("eval", "tap", args.tap);
  if (args.seed) cfg.Set("eval", "trial_seed", std::to_string(*args.seed));
  const vqlab::EvalOptions options = vqlab::EvalOptionsFromKeyValues(cfg);

  const vqlab::BottleneckModel model = vqlab::LoadCheckpoint(args.checkpoint);
  const vqlab::Corpus corpus = vqlab::LoadCorpus(args.corpus);
  if (model.input_dim() != corpus.config.frame_dim ||
      model.num_classes() != corpus.config.num_content_classes) {
    throw InputError("checkpoint dimensions do not match the corpus");
  }
  const vqlab::CorpusSplit split = vqlab::SplitCorpus(
      corpus, model.config().train_fraction, corpus.config.seed);
  const vqlab::EvalArtifacts artifacts =
      vqlab::CollectArtifacts(model, corpus, split, options);

  vqlab::KeyValueConfig echo;
  vqlab::CorpusConfigToKeyValues(corpus.config, echo);
  vqlab::ModelConfigToKeyValues(model.config(), echo);
  vqlab::EvalOptionsToKeyValues(options, echo);
  const vqlab::MetricsReport report = vqlab::ReportFromArtifacts(
      args.condition, model.config().codebook_size, artifacts,
      corpus.config.num_speakers, echo, model.config().seed, options);

  const fs::path out(args.out);
  fs::create_directories(out);
  {
    std::ofstream file(out / "report.txt", std::ios::binary);
    file << vqlab::SerializeReport(report);
    if (!file) throw std::runtime_error("failed writing report");
  }
  vqlab::SaveArtifacts(artifacts, (out / "artifacts").string());
  if (args.dump_features) {
    const fs::path dir = out / "features";
    fs::create_directories(dir);
    for (int u : split.eval) {
      const vqlab::FrameSequence& utt = corpus.utterances[static_cast<size_t>(u)];
      std::ofstream file(dir / vqlab::UtteranceFileName(utt.utterance_id));
      vqlab::WriteMatrixText(file, vqlab::ExtractFeatures(model, utt.frames, options.tap));
      if (!file) throw std::runtime_error("failed writing feature dump");
    }
  }
  std::cout << vqlab::kReportCsvHeader << '\n' << vqlab::ReportCsvRow(report) << '\n';
  return kExitOk;
}

struct SweepArgs {
  std::string config;
  std::string out;
  std::string tap;
  std::optional<uint64_t> seed;
};

int Sweep(const SweepArgs& args) {
  vqlab::ExperimentPlan plan = args.config.empty()
                                   ? vqlab::DefaultPlan()
                                   : vqlab::ParsePlan(LoadOptionalConfig(args.config));
  if (!args.tap.empty()) plan.eval.tap = vqlab::ParseFeatureTap(args.tap);
  if (args.seed) {
    for (vqlab::ConditionSpec& c : plan.conditions) c.seeds = {*args.seed};
  }
  plan.Validate();
  const vqlab::SweepResult result = vqlab::RunSweep(plan, args.out);
  vqlab::WriteReportsCsv(std::cout, result.reports);
  for (const vqlab::F0Result& f : result.f0) {
    std::cout << "f0 seed=" << f.seed
              << " probe_original=" << vqlab::FormatDouble(f.probe_original)
              << " probe_shifted=" << vqlab::FormatDouble(f.probe_shifted);
    if (f.probe_noisy) std::cout << " probe_noisy=" << vqlab::FormatDouble(*f.probe_noisy);
    if (f.measured_snr_db) {
      std::cout << " measured_snr_db=" << vqlab::FormatDouble(*f.measured_snr_db);
    }
    std::cout << '\n';
  }
  for (const vqlab::RunFailure& f : result.failures) {
    std::cerr << "failed: " << f.condition << " seed " << f.seed << ": " << f.message
              << '\n';
  }
  return result.failures.empty() ? kExitOk : kExitRuntime;
}

struct F0Args {
  std::string config;
  std::string in;
  std::string out;
  std::optional<double> target_mean;
  std::optional<double> target_std;
  std::optional<double> src_mean;
  std::optional<double> src_std;
  std::optional<double> snr_db;
  std::optional<uint64_t> seed;
  std::string snr_reference = "variance";
};

int F0(const F0Args& args) {
  const vqlab::KeyValueConfig cfg = LoadOptionalConfig(args.config);
  auto pick = [&](const std::optional<double>& flag,
                  const std::string& key) -> std::optional<double> {
    if (flag) return flag;
    if (auto v = cfg.Find("f0", key)) return vqlab::ParseDouble(*v, "f0." + key);
    return std::nullopt;
  };
  const std::optional<double> target_mean = pick(args.target_mean, "target_mean");
  const std::optional<double> target_std = pick(args.target_std, "target_std");
  if (!target_mean || !target_std) {
    throw InputError("f0: target mean and std are required");
  }
  const std::optional<double> snr_db = pick(args.snr_db, "snr_db");
  const uint64_t seed = args.seed ? *args.seed : cfg.GetUint("f0", "seed", 1);
  vqlab::SnrReference reference;
  if (args.snr_reference == "variance") {
    reference = vqlab::SnrReference::kVariance;
  } else if (args.snr_reference == "mean_square") {
    reference = vqlab::SnrReference::kMeanSquare;
  } else {
    throw InputError("f0: --snr-reference must be variance or mean_square");
  }

  RequireFile(args.in, "F0 track");
  const vqlab::F0Track track = vqlab::LoadF0Track(args.in);
  vqlab::F0Stats src = vqlab::ComputeF0Stats(track);
  if (args.src_mean) src.mean = *args.src_mean;
  if (args.src_std) src.std = *args.src_std;
  const vqlab::F0Stats tgt{*target_mean, *target_std, 0};
  vqlab::F0Track result = vqlab::LinearShift(track, src, tgt);
  std::optional<double> measured;
  if (snr_db) {
    std::mt19937_64 rng(seed);
    const vqlab::F0Track clean = result;
    result = vqlab::AddAwgn(clean, *snr_db, rng, reference);
    if (std::isfinite(*snr_db)) measured = vqlab::MeasuredSnr(clean, result, reference);
  }
  vqlab::SaveF0Track(args.out, result);
  std::cout << "src_mean=" << vqlab::FormatDouble(src.mean)
            << " src_std=" << vqlab::FormatDouble(src.std)
            << " tgt_mean=" << vqlab::FormatDouble(tgt.mean)
            << " tgt_std=" << vqlab::FormatDouble(tgt.std);
  if (measured) std::cout << " measured_snr_db=" << vqlab::FormatDouble(*measured);
  std::cout << '\n';
  return kExitOk;
}

template <typename Fn>
int Guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const vqlab::TrainingDivergedError& e) {
    std::cerr << "error: " << e.what() << " at step " << e.step() << '\n';
    if (e.last_finite()) {
      std::cerr << "last finite losses: " << Losses(*e.last_finite()) << '\n';
    }
    return kExitRuntime;
  } catch (const vqlab::DegenerateF0Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  } catch (const vqlab::FormatError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::logic_error& e) {
    // ConfigError, ShapeError, out_of_range and other invalid input.
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Vector-quantized bottleneck speaker anonymization toolkit"};
  app.require_subcommand(1);
  int status = kExitOk;

  GenDataArgs gen;
  CLI::App* gen_cmd = app.add_subcommand("gen-data", "Generate a synthetic corpus");
  gen_cmd->add_option("--config", gen.config, "Config file with a [corpus] section");
  gen_cmd->add_option("--out", gen.out, "Output directory")->required();
  gen_cmd->add_option("--seed", gen.seed, "Override the corpus seed");
  gen_cmd->callback([&] { status = Guarded([&] { return GenData(gen); }); });

  TrainArgs train;
  CLI::App* train_cmd = app.add_subcommand("train", "Train a bottleneck model");
  train_cmd->add_option("--corpus", train.corpus, "Corpus directory")->required();
  train_cmd->add_option("--config", train.config, "Config file with a [model] section");
  train_cmd->add_option("--out", train.out, "Output directory")->required();
  train_cmd->add_option("--seed", train.seed, "Override the model seed");
  train_cmd->callback([&] { status = Guarded([&] { return Train(train); }); });

  EvalArgs eval;
  CLI::App* eval_cmd = app.add_subcommand("eval", "Evaluate privacy and utility");
  eval_cmd->add_option("--checkpoint", eval.checkpoint, "Model checkpoint")->required();
  eval_cmd->add_option("--corpus", eval.corpus, "Corpus directory")->required();
  eval_cmd->add_option("--config", eval.config, "Config file with an [eval] section");
  eval_cmd->add_option("--out", eval.out, "Output directory")->required();
  eval_cmd->add_option("--condition", eval.condition, "Condition label for the report");
  eval_cmd->add_option("--tap", eval.tap, "Feature tap")
      ->check(CLI::IsMember({"pre_vq", "post_vq"}));
  eval_cmd->add_option("--seed", eval.seed, "Override the trial sampling seed");
  eval_cmd->add_flag("--dump-features", eval.dump_features,
                     "Write per-utterance eval features");
  eval_cmd->callback([&] { status = Guarded([&] { return Eval(eval); }); });

  SweepArgs sweep;
  CLI::App* sweep_cmd = app.add_subcommand("sweep", "Run an experiment plan");
  sweep_cmd->add_option("--config", sweep.config,
                        "Plan file (default: the built-in benchmark plan)");
  sweep_cmd->add_option("--out", sweep.out, "Output directory")->required();
  sweep_cmd->add_option("--tap", sweep.tap, "Feature tap")
      ->check(CLI::IsMember({"pre_vq", "post_vq"}));
  sweep_cmd->add_option("--seed", sweep.seed, "Run every condition with this seed only");
  sweep_cmd->callback([&] { status = Guarded([&] { return Sweep(sweep); }); });

  F0Args f0;
  CLI::App* f0_cmd = app.add_subcommand("f0", "Shift an F0 track and add noise");
  f0_cmd->add_option("--config", f0.config, "Config file with an [f0] section");
  f0_cmd->add_option("--in", f0.in, "Input track file")->required();
  f0_cmd->add_option("--out", f0.out, "Output track file")->required();
  f0_cmd->add_option("--target-mean", f0.target_mean, "Target F0 mean in Hz");
  f0_cmd->add_option("--target-std", f0.target_std, "Target F0 std in Hz");
  f0_cmd->add_option("--src-mean", f0.src_mean, "Source mean (default: from the track)");
  f0_cmd->add_option("--src-std", f0.src_std, "Source std (default: from the track)");
  f0_cmd->add_option("--snr-db", f0.snr_db, "Add white noise at this SNR");
  f0_cmd->add_option("--seed", f0.seed, "Noise seed");
  f0_cmd->add_option("--snr-reference", f0.snr_reference, "variance or mean_square");
  f0_cmd->callback([&] { status = Guarded([&] { return F0(f0); }); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInput;
  }
  return status;
}
