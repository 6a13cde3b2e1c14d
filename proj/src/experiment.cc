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

#include "vqlab/experiment.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <utility>

#include "vqlab/binary_io.h"
#include "vqlab/f0.h"

namespace vqlab {
namespace {

namespace fs = std::filesystem;

constexpr char kConditionPrefix[] = "condition.";
constexpr char kTrainEmbeddingsFile[] = "embeddings_train.txt";
constexpr char kEvalEmbeddingsFile[] = "embeddings_eval.txt";
constexpr char kMatedFile[] = "scores_mated.txt";
constexpr char kNonmatedFile[] = "scores_nonmated.txt";
constexpr char kContentFile[] = "content_counts.txt";
constexpr char kReportFile[] = "report.txt";
constexpr char kArtifactsDir[] = "artifacts";

constexpr uint32_t kF0Stream = 0x66307472;
constexpr uint32_t kAwgnStream = 0x6177676e;

std::mt19937_64 StreamRng(uint64_t seed, uint32_t stream, uint64_t index) {
  std::seed_seq seq{static_cast<uint32_t>(seed), static_cast<uint32_t>(seed >> 32),
                    stream, static_cast<uint32_t>(index),
                    static_cast<uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

std::vector<uint64_t> ParseSeedList(const std::string& text, const std::string& what) {
  std::vector<uint64_t> seeds;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    const auto first = item.find_first_not_of(" \t");
    const auto last = item.find_last_not_of(" \t");
    if (first == std::string::npos) throw ConfigError(what + ": empty seed entry");
    seeds.push_back(ParseUint(item.substr(first, last - first + 1), what));
  }
  return seeds;
}

std::string JoinSeeds(const std::vector<uint64_t>& seeds) {
  std::string out;
  for (size_t i = 0; i < seeds.size(); ++i) {
    if (i > 0) out += ',';
    out += std::to_string(seeds[i]);
  }
  return out;
}

void WriteEmbeddings(const std::string& path, const Matrix& embeddings,
                     const std::vector<int>& speakers) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  for (Eigen::Index r = 0; r < embeddings.rows(); ++r) {
    out << speakers[static_cast<size_t>(r)];
    for (Eigen::Index c = 0; c < embeddings.cols(); ++c) {
      out << ' ' << FormatDouble(embeddings(r, c));
    }
    out << '\n';
  }
  if (!out) throw std::runtime_error("failed writing " + path);
}

void ReadEmbeddings(const std::string& path, Matrix& embeddings,
                    std::vector<int>& speakers) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open embedding file " + path);
  std::vector<std::vector<double>> rows;
  speakers.clear();
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string token;
    fields >> token;
    speakers.push_back(static_cast<int>(ParseInt(token, path + " speaker")));
    std::vector<double> row;
    while (fields >> token) row.push_back(ParseDouble(token, path + " value"));
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw FormatError(path + ": ragged embedding rows");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty() || rows.front().empty()) throw FormatError(path + ": no embeddings");
  embeddings.resize(static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(rows.front().size()));
  for (size_t r = 0; r < rows.size(); ++r) {
    for (size_t c = 0; c < rows[r].size(); ++c) {
      embeddings(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    }
  }
}

std::string ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path);
  std::ostringstream text;
  text << in.rdbuf();
  return text.str();
}

void WriteFile(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << text;
  if (!out) throw std::runtime_error("failed writing " + path);
}

KeyValueConfig RunEcho(const CorpusConfig& corpus, const ModelConfig& model,
                       const EvalOptions& eval) {
  KeyValueConfig echo;
  CorpusConfigToKeyValues(corpus, echo);
  ModelConfigToKeyValues(model, echo);
  EvalOptionsToKeyValues(eval, echo);
  return echo;
}

Matrix F0Features(const std::vector<F0Track>& tracks, const std::vector<int>& utts) {
  Matrix x(static_cast<Eigen::Index>(utts.size()), 2);
  for (size_t i = 0; i < utts.size(); ++i) {
    const F0Stats s = ComputeF0Stats(tracks[static_cast<size_t>(utts[i])]);
    x(static_cast<Eigen::Index>(i), 0) = s.mean;
    x(static_cast<Eigen::Index>(i), 1) = s.std;
  }
  return x;
}

std::vector<int> SpeakersOf(const Corpus& corpus, const std::vector<int>& utts) {
  std::vector<int> out;
  out.reserve(utts.size());
  for (int u : utts) out.push_back(corpus.utterances[static_cast<size_t>(u)].speaker);
  return out;
}

double F0ProbeAccuracy(const Corpus& corpus, const CorpusSplit& split,
                       const std::vector<F0Track>& tracks, const ProbeConfig& config) {
  const LinearProbe probe =
      LinearProbe::Fit(F0Features(tracks, split.train), SpeakersOf(corpus, split.train),
                       corpus.config.num_speakers, config);
  return probe.Accuracy(F0Features(tracks, split.eval), SpeakersOf(corpus, split.eval));
}

std::string OptionalToString(const std::optional<double>& v) {
  return v ? FormatDouble(*v) : "none";
}

}  // namespace

void EvalOptionsToKeyValues(const EvalOptions& o, KeyValueConfig& cfg) {
  cfg.Set("eval", "tap", ToString(o.tap));
  cfg.Set("eval", "trial_seed", std::to_string(o.trial_seed));
  cfg.Set("eval", "probe_max_iterations", std::to_string(o.probe.max_iterations));
  cfg.Set("eval", "probe_learning_rate", FormatDouble(o.probe.learning_rate));
  cfg.Set("eval", "probe_l2", FormatDouble(o.probe.l2));
  cfg.Set("eval", "probe_tolerance", FormatDouble(o.probe.tolerance));
  cfg.Set("eval", "linkability_bins", std::to_string(o.linkability_bins));
}

EvalOptions EvalOptionsFromKeyValues(const KeyValueConfig& cfg) {
  EvalOptions o;
  try {
    o.tap = ParseFeatureTap(cfg.GetString("eval", "tap", ToString(o.tap)));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  o.trial_seed = cfg.GetUint("eval", "trial_seed", o.trial_seed);
  o.probe.max_iterations = static_cast<int>(
      cfg.GetInt("eval", "probe_max_iterations", o.probe.max_iterations));
  o.probe.learning_rate =
      cfg.GetDouble("eval", "probe_learning_rate", o.probe.learning_rate);
  o.probe.l2 = cfg.GetDouble("eval", "probe_l2", o.probe.l2);
  o.probe.tolerance = cfg.GetDouble("eval", "probe_tolerance", o.probe.tolerance);
  o.linkability_bins = static_cast<int>(
      cfg.GetInt("eval", "linkability_bins", o.linkability_bins));
  if (o.probe.max_iterations < 1 || !(o.probe.learning_rate > 0.0) ||
      !(o.probe.l2 >= 0.0) || o.linkability_bins < 2) {
    throw ConfigError("eval: probe settings must be positive, linkability_bins >= 2");
  }
  return o;
}

EvalArtifacts CollectArtifacts(const BottleneckModel& model, const Corpus& corpus,
                               const CorpusSplit& split, const EvalOptions& options) {
  EvalArtifacts a;
  const int dim = model.config().hidden_dim;
  auto pool = [&](const std::vector<int>& utts, Matrix& embeddings,
                  std::vector<int>& speakers, ContentCounts* content) {
    embeddings.resize(static_cast<Eigen::Index>(utts.size()), dim);
    speakers.clear();
    for (size_t i = 0; i < utts.size(); ++i) {
      const FrameSequence& u = corpus.utterances.at(static_cast<size_t>(utts[i]));
      const BottleneckModel::Output out = model.Forward(u.frames);
      const Matrix& features = options.tap == FeatureTap::kPreVq ? out.h : out.q;
      embeddings.row(static_cast<Eigen::Index>(i)) = MeanPool(features).transpose();
      speakers.push_back(u.speaker);
      if (content != nullptr) {
        const std::vector<int> labels =
            DecimateLabels(u.content_labels, model.config().subsample_stride);
        for (Eigen::Index j = 0; j < out.logits.rows(); ++j) {
          Eigen::Index best;
          out.logits.row(j).maxCoeff(&best);
          content->errors += best != labels[static_cast<size_t>(j)] ? 1 : 0;
          ++content->frames;
        }
      }
    }
  };
  pool(split.train, a.train_embeddings, a.train_speakers, nullptr);
  pool(split.eval, a.eval_embeddings, a.eval_speakers, &a.content);

  const Vector centre = a.train_embeddings.colwise().mean().transpose();
  std::vector<Vector> centred;
  centred.reserve(static_cast<size_t>(a.eval_embeddings.rows()));
  for (Eigen::Index r = 0; r < a.eval_embeddings.rows(); ++r) {
    centred.push_back(UtteranceEmbedding(
        (a.eval_embeddings.row(r).transpose() - centre).transpose()));
  }
  a.scores = ScoreTrials(centred, a.eval_speakers, options.trial_seed);
  return a;
}

MetricsReport ReportFromArtifacts(const std::string& condition,
                                  std::optional<int> codebook_size,
                                  const EvalArtifacts& artifacts, int num_speakers,
                                  const KeyValueConfig& echo, uint64_t seed,
                                  const EvalOptions& options) {
  const LinearProbe probe = LinearProbe::Fit(
      artifacts.train_embeddings, artifacts.train_speakers, num_speakers, options.probe);
  const double accuracy =
      probe.Accuracy(artifacts.eval_embeddings, artifacts.eval_speakers);
  const EerResult eer = ComputeEer(artifacts.scores);
  const LinkabilityResult link =
      ComputeLinkability(artifacts.scores, options.linkability_bins);
  return AssembleReport(condition, codebook_size, artifacts.content.rate(), accuracy,
                        eer.eer, link.d_sys, echo, seed);
}

void SaveArtifacts(const EvalArtifacts& a, const std::string& dir) {
  fs::create_directories(dir);
  const fs::path root(dir);
  WriteEmbeddings((root / kTrainEmbeddingsFile).string(), a.train_embeddings,
                  a.train_speakers);
  WriteEmbeddings((root / kEvalEmbeddingsFile).string(), a.eval_embeddings,
                  a.eval_speakers);
  SaveScores((root / kMatedFile).string(), a.scores.mated);
  SaveScores((root / kNonmatedFile).string(), a.scores.nonmated);
  WriteFile((root / kContentFile).string(),
            "errors " + std::to_string(a.content.errors) + "\nframes " +
                std::to_string(a.content.frames) + "\n");
}

EvalArtifacts LoadArtifacts(const std::string& dir) {
  const fs::path root(dir);
  EvalArtifacts a;
  ReadEmbeddings((root / kTrainEmbeddingsFile).string(), a.train_embeddings,
                 a.train_speakers);
  ReadEmbeddings((root / kEvalEmbeddingsFile).string(), a.eval_embeddings,
                 a.eval_speakers);
  a.scores.mated = LoadScores((root / kMatedFile).string());
  a.scores.nonmated = LoadScores((root / kNonmatedFile).string());
  std::istringstream content(ReadFile((root / kContentFile).string()));
  std::string key_errors, key_frames;
  if (!(content >> key_errors >> a.content.errors >> key_frames >> a.content.frames) ||
      key_errors != "errors" || key_frames != "frames") {
    throw FormatError(dir + ": malformed content counts");
  }
  return a;
}

MetricsReport Rederive(const std::string& run_dir) {
  const fs::path root(run_dir);
  const MetricsReport stored = ParseReport(ReadFile((root / kReportFile).string()));
  const EvalOptions options = EvalOptionsFromKeyValues(stored.config);
  const CorpusConfig corpus = CorpusConfigFromKeyValues(stored.config);
  return ReportFromArtifacts(stored.condition, stored.codebook_size,
                             LoadArtifacts((root / kArtifactsDir).string()),
                             corpus.num_speakers, stored.config, stored.seed, options);
}

void ExperimentPlan::Validate() const {
  corpus.Validate();
  model.Validate();
  if (conditions.empty()) throw ConfigError("plan: no conditions");
  std::set<std::string> names;
  for (const ConditionSpec& c : conditions) {
    if (c.name.empty() || c.name.find_first_of(",\n\r=[]/ ") != std::string::npos) {
      throw ConfigError("plan: invalid condition name '" + c.name + "'");
    }
    if (!names.insert(c.name).second) {
      throw ConfigError("plan: duplicate condition " + c.name);
    }
    if (c.seeds.empty()) throw ConfigError("plan: condition " + c.name + " has no seeds");
    if (std::set<uint64_t>(c.seeds.begin(), c.seeds.end()).size() != c.seeds.size()) {
      throw ConfigError("plan: repeated seed in condition " + c.name);
    }
    RunModelConfig(*this, c, c.seeds.front()).Validate();
  }
  if (f0.awgn_snr_db && std::isnan(*f0.awgn_snr_db)) {
    throw ConfigError("plan: f0.awgn_snr_db is NaN");
  }
  if (!(f0.target_std > 0.0) || !(f0.target_mean > 0.0)) {
    throw ConfigError("plan: f0 target mean and std must be positive");
  }
}

ExperimentPlan ParsePlan(const KeyValueConfig& cfg) {
  ExperimentPlan plan;
  plan.corpus = CorpusConfigFromKeyValues(cfg);
  plan.model = ModelConfigFromKeyValues(cfg);
  plan.eval = EvalOptionsFromKeyValues(cfg);
  const std::string prefix = kConditionPrefix;
  for (const std::string& section : cfg.SectionNames()) {
    if (section.rfind(prefix, 0) != 0) continue;
    ConditionSpec c;
    c.name = section.substr(prefix.size());
    c.codebook_size = plan.model.codebook_size;
    if (auto v = cfg.Find(section, "codebook_size")) {
      c.codebook_size.reset();
      if (*v != "none") {
        c.codebook_size = static_cast<int>(ParseInt(*v, section + ".codebook_size"));
      }
    }
    c.encoder_depth = static_cast<int>(
        cfg.GetInt(section, "encoder_depth", plan.model.encoder_depth));
    c.beta = cfg.GetDouble(section, "beta", plan.model.beta);
    c.seeds = ParseSeedList(cfg.GetString(section, "seeds", "1,2,3"), section + ".seeds");
    plan.conditions.push_back(std::move(c));
  }
  plan.f0.shift_to_common_target =
      cfg.GetBool("f0", "shift_to_common_target", plan.f0.shift_to_common_target);
  if (auto v = cfg.Find("f0", "awgn_snr_db"); v && *v != "none") {
    plan.f0.awgn_snr_db = ParseDouble(*v, "f0.awgn_snr_db");
  }
  plan.f0.target_mean = cfg.GetDouble("f0", "target_mean", plan.f0.target_mean);
  plan.f0.target_std = cfg.GetDouble("f0", "target_std", plan.f0.target_std);
  plan.Validate();
  return plan;
}

ExperimentPlan LoadPlan(const std::string& path) {
  return ParsePlan(KeyValueConfig::Load(path));
}

KeyValueConfig PlanToKeyValues(const ExperimentPlan& plan) {
  KeyValueConfig cfg;
  CorpusConfigToKeyValues(plan.corpus, cfg);
  ModelConfigToKeyValues(plan.model, cfg);
  EvalOptionsToKeyValues(plan.eval, cfg);
  for (const ConditionSpec& c : plan.conditions) {
    const std::string section = kConditionPrefix + c.name;
    cfg.Set(section, "codebook_size",
            c.codebook_size ? std::to_string(*c.codebook_size) : "none");
    cfg.Set(section, "encoder_depth", std::to_string(c.encoder_depth));
    cfg.Set(section, "beta", FormatDouble(c.beta));
    cfg.Set(section, "seeds", JoinSeeds(c.seeds));
  }
  cfg.Set("f0", "shift_to_common_target", plan.f0.shift_to_common_target ? "true" : "false");
  cfg.Set("f0", "awgn_snr_db", OptionalToString(plan.f0.awgn_snr_db));
  cfg.Set("f0", "target_mean", FormatDouble(plan.f0.target_mean));
  cfg.Set("f0", "target_std", FormatDouble(plan.f0.target_std));
  return cfg;
}

ExperimentPlan DefaultPlan() {
  ExperimentPlan plan;
  const std::vector<uint64_t> seeds = {1, 2, 3};
  plan.conditions.push_back({"no_vq", std::nullopt, plan.model.encoder_depth,
                             plan.model.beta, seeds});
  for (int v : {256, 128, 64}) {
    plan.conditions.push_back({"vq_" + std::to_string(v), v, plan.model.encoder_depth,
                               plan.model.beta, seeds});
  }
  plan.Validate();
  return plan;
}

CorpusConfig RunCorpusConfig(const ExperimentPlan& plan, uint64_t seed) {
  CorpusConfig c = plan.corpus;
  c.seed = seed;
  return c;
}

ModelConfig RunModelConfig(const ExperimentPlan& plan, const ConditionSpec& condition,
                           uint64_t seed) {
  ModelConfig m = plan.model;
  m.codebook_size = condition.codebook_size;
  m.encoder_depth = condition.encoder_depth;
  m.beta = condition.beta;
  m.seed = seed;
  return m;
}

std::string ProvenanceTimestamp() {
  const char* epoch = std::getenv("SOURCE_DATE_EPOCH");
  return epoch != nullptr && *epoch != '\0' ? std::string(epoch) : "unset";
}

std::vector<F0Track> GenerateCorpusF0(const Corpus& corpus) {
  std::vector<F0Track> tracks;
  tracks.reserve(corpus.utterances.size());
  for (const FrameSequence& u : corpus.utterances) {
    std::mt19937_64 rng = StreamRng(corpus.config.seed, kF0Stream,
                                    static_cast<uint64_t>(u.utterance_id));
    tracks.push_back(GenerateF0Track(corpus.speakers.at(static_cast<size_t>(u.speaker)),
                                     corpus.config.frames_per_utterance, rng));
  }
  return tracks;
}

F0Result EvaluateF0(const Corpus& corpus, const CorpusSplit& split, const F0Plan& plan,
                    uint64_t seed, const ProbeConfig& probe) {
  F0Result result;
  result.seed = seed;
  result.chance = 1.0 / corpus.config.num_speakers;
  const std::vector<F0Track> original = GenerateCorpusF0(corpus);
  result.probe_original = F0ProbeAccuracy(corpus, split, original, probe);

  std::vector<F0Track> shifted = original;
  if (plan.shift_to_common_target) {
    const F0Stats target{plan.target_mean, plan.target_std, 0};
    for (F0Track& t : shifted) t = LinearShift(t, ComputeF0Stats(t), target);
  }
  result.probe_shifted = F0ProbeAccuracy(corpus, split, shifted, probe);

  if (plan.awgn_snr_db) {
    std::vector<F0Track> noisy;
    noisy.reserve(shifted.size());
    F0Track clean_all, noisy_all;
    for (size_t i = 0; i < shifted.size(); ++i) {
      std::mt19937_64 rng = StreamRng(seed, kAwgnStream, i);
      noisy.push_back(AddAwgn(shifted[i], *plan.awgn_snr_db, rng));
      for (const auto& [dst, src] : {std::pair{&clean_all, &shifted[i]},
                                     std::pair{&noisy_all, &noisy.back()}}) {
        dst->values.insert(dst->values.end(), src->values.begin(), src->values.end());
        dst->voiced.insert(dst->voiced.end(), src->voiced.begin(), src->voiced.end());
      }
    }
    result.probe_noisy = F0ProbeAccuracy(corpus, split, noisy, probe);
    if (std::isfinite(*plan.awgn_snr_db)) {
      result.measured_snr_db = MeasuredSnr(clean_all, noisy_all);
    }
  }
  return result;
}

SweepResult RunSweep(const ExperimentPlan& plan, const std::string& out_dir) {
  plan.Validate();
  SweepResult result;
  result.timestamp = ProvenanceTimestamp();
  const bool write = !out_dir.empty();
  const fs::path root(out_dir);
  if (write) fs::create_directories(root);

  struct Data {
    Corpus corpus;
    CorpusSplit split;
  };
  std::map<uint64_t, Data> data;
  std::vector<uint64_t> seed_order;
  auto data_for = [&](uint64_t seed) -> const Data& {
    auto it = data.find(seed);
    if (it == data.end()) {
      Corpus corpus = GenerateCorpus(RunCorpusConfig(plan, seed));
      CorpusSplit split = SplitCorpus(corpus, plan.model.train_fraction, seed);
      it = data.emplace(seed, Data{std::move(corpus), std::move(split)}).first;
      seed_order.push_back(seed);
    }
    return it->second;
  };

  for (const ConditionSpec& condition : plan.conditions) {
    for (uint64_t seed : condition.seeds) {
      try {
        const Data& d = data_for(seed);
        const ModelConfig model_config = RunModelConfig(plan, condition, seed);
        BottleneckModel model(model_config, d.corpus.config.frame_dim,
                              d.corpus.config.num_content_classes);
        const std::vector<StepRecord> history = Train(model, d.corpus, d.split.train);
        EvalOptions options = plan.eval;
        options.trial_seed = seed;
        const EvalArtifacts artifacts = CollectArtifacts(model, d.corpus, d.split, options);
        MetricsReport report = ReportFromArtifacts(
            condition.name, condition.codebook_size, artifacts,
            d.corpus.config.num_speakers, RunEcho(d.corpus.config, model_config, options),
            seed, options);
        if (write) {
          const fs::path run = root / condition.name / ("seed_" + std::to_string(seed));
          fs::create_directories(run);
          WriteFile((run / kReportFile).string(), SerializeReport(report));
          std::ofstream loss(run / "loss.csv");
          WriteLossHistoryCsv(loss, history);
          SaveCheckpoint((run / "model.ckpt").string(), model);
          SaveArtifacts(artifacts, (run / kArtifactsDir).string());
        }
        result.reports.push_back(std::move(report));
      } catch (const std::exception& e) {
        result.failures.push_back({condition.name, seed, e.what()});
      }
    }
  }

  if (plan.f0.enabled()) {
    for (uint64_t seed : seed_order) {
      const Data& d = data.at(seed);
      result.f0.push_back(EvaluateF0(d.corpus, d.split, plan.f0, seed, plan.eval.probe));
    }
  }

  if (write) {
    std::ostringstream csv;
    WriteReportsCsv(csv, result.reports);
    WriteFile((root / "results.csv").string(), csv.str());
    std::ostringstream failures;
    for (const RunFailure& f : result.failures) {
      failures << f.condition << ',' << f.seed << ',' << f.message << '\n';
    }
    WriteFile((root / "failures.txt").string(), failures.str());
    if (plan.f0.enabled()) {
      std::ostringstream f0;
      f0 << "seed,probe_original,probe_shifted,probe_noisy,measured_snr_db,chance\n";
      for (const F0Result& r : result.f0) {
        f0 << r.seed << ',' << FormatDouble(r.probe_original) << ','
           << FormatDouble(r.probe_shifted) << ',' << OptionalToString(r.probe_noisy)
           << ',' << OptionalToString(r.measured_snr_db) << ','
           << FormatDouble(r.chance) << '\n';
      }
      WriteFile((root / "f0_table.csv").string(), f0.str());
    }
    WriteFile((root / "plan.cfg").string(), PlanToKeyValues(plan).ToString());
    WriteFile((root / "provenance.txt").string(),
              "version = " + result.version + "\ntimestamp = " + result.timestamp + "\n");
  }
  return result;
}

}  // namespace vqlab
