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

#include "vqlab/model.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>

#include "vqlab/binary_io.h"

namespace vqlab {
namespace {

constexpr char kCheckpointMagic[] = "VQAM";
constexpr uint32_t kCheckpointVersion = 1;

enum Stream : uint32_t {
  kInitStream = 1,
  kShuffleStream = 2,
  kCodebookInitStream = 3,
  kReseedStream = 4,
};

std::mt19937_64 ModelRng(uint64_t seed, Stream stream) {
  std::seed_seq seq{static_cast<uint32_t>(seed),
                    static_cast<uint32_t>(seed >> 32),
                    static_cast<uint32_t>(stream), 0x6d6f646cu};
  return std::mt19937_64(seq);
}

DenseLayer MakeLayer(int in, int out, double gain, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, std::sqrt(gain / in));
  Matrix w(in, out);
  for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = normal(rng);
  return DenseLayer{Tensor2D(std::move(w)), Tensor2D(Matrix::Zero(1, out))};
}

Matrix Apply(const DenseLayer& layer, const Matrix& x) {
  Matrix out(x.rows(), layer.weight.cols());
  out.noalias() = x * layer.weight.value;
  out.rowwise() += layer.bias.value.row(0);
  return out;
}

Var ApplyOnTape(Tape& tape, DenseLayer& layer, Var x) {
  return Linear(tape, x, tape.Watch(layer.weight), tape.Watch(layer.bias));
}

bool LayersEqual(const std::vector<DenseLayer>& a,
                 const std::vector<DenseLayer>& b) {
  if (a.size() != b.size()) return false;
  for (size_t i = 0; i < a.size(); ++i) {
    if (a[i].weight.value != b[i].weight.value ||
        a[i].bias.value != b[i].bias.value) {
      return false;
    }
  }
  return true;
}

bool AllFinite(const Matrix& m) { return m.allFinite(); }

}  // namespace

std::string ToString(FeatureTap tap) {
  return tap == FeatureTap::kPreVq ? "pre_vq" : "post_vq";
}

FeatureTap ParseFeatureTap(const std::string& text) {
  if (text == "pre_vq") return FeatureTap::kPreVq;
  if (text == "post_vq") return FeatureTap::kPostVq;
  throw ConfigError("tap must be pre_vq or post_vq, got '" + text + "'");
}

void ModelConfig::Validate() const {
  auto require = [](bool ok, const std::string& msg) {
    if (!ok) throw ConfigError("model config: " + msg);
  };
  require(encoder_depth >= 1 && encoder_depth <= 8,
          "encoder_depth must lie in [1, 8]");
  require(hidden_dim >= 1, "hidden_dim must be >= 1");
  require(!codebook_size || *codebook_size >= 1, "codebook_size must be >= 1");
  require(subsample_stride == 1 || subsample_stride == 3,
          "subsample_stride must be 1 or 3");
  require(std::isfinite(beta) && beta >= 0.0, "beta must be >= 0");
  require(epochs >= 0, "epochs must be >= 0");
  require(batch_utterances >= 1, "batch_utterances must be >= 1");
  require(learning_rate > 0.0, "learning_rate must be > 0");
  require(ema_decay > 0.0 && ema_decay < 1.0, "ema_decay must lie in (0, 1)");
  require(laplace_eps > 0.0, "laplace_eps must be > 0");
  require(dead_code_threshold >= 0.0, "dead_code_threshold must be >= 0");
  require(train_fraction > 0.0 && train_fraction < 1.0,
          "train_fraction must lie in (0, 1)");
}

ModelConfig ModelConfigFromKeyValues(const KeyValueConfig& cfg,
                                     const std::string& section) {
  ModelConfig m;
  m.encoder_depth = static_cast<int>(cfg.GetInt(section, "encoder_depth", m.encoder_depth));
  m.hidden_dim = static_cast<int>(cfg.GetInt(section, "hidden_dim", m.hidden_dim));
  if (auto v = cfg.Find(section, "codebook_size")) {
    if (*v == "none") {
      m.codebook_size.reset();
    } else {
      m.codebook_size = static_cast<int>(ParseInt(*v, section + ".codebook_size"));
    }
  }
  m.subsample_stride = static_cast<int>(
      cfg.GetInt(section, "subsample_stride", m.subsample_stride));
  m.beta = cfg.GetDouble(section, "beta", m.beta);
  m.epochs = static_cast<int>(cfg.GetInt(section, "epochs", m.epochs));
  m.batch_utterances = static_cast<int>(
      cfg.GetInt(section, "batch_utterances", m.batch_utterances));
  m.seed = cfg.GetUint(section, "seed", m.seed);
  m.learning_rate = cfg.GetDouble(section, "learning_rate", m.learning_rate);
  const std::string update = cfg.GetString(section, "codebook_update", "ema");
  if (update == "ema") {
    m.codebook_update = CodebookUpdate::kEma;
  } else if (update == "gradient") {
    m.codebook_update = CodebookUpdate::kGradient;
  } else {
    throw ConfigError(section + ".codebook_update must be ema or gradient");
  }
  m.ema_decay = cfg.GetDouble(section, "ema_decay", m.ema_decay);
  m.laplace_eps = cfg.GetDouble(section, "laplace_eps", m.laplace_eps);
  m.dead_code_threshold =
      cfg.GetDouble(section, "dead_code_threshold", m.dead_code_threshold);
  m.train_fraction = cfg.GetDouble(section, "train_fraction", m.train_fraction);
  m.Validate();
  return m;
}

void ModelConfigToKeyValues(const ModelConfig& m, KeyValueConfig& cfg,
                            const std::string& section) {
  cfg.Set(section, "encoder_depth", std::to_string(m.encoder_depth));
  cfg.Set(section, "hidden_dim", std::to_string(m.hidden_dim));
  cfg.Set(section, "codebook_size",
          m.codebook_size ? std::to_string(*m.codebook_size) : "none");
  cfg.Set(section, "subsample_stride", std::to_string(m.subsample_stride));
  cfg.Set(section, "beta", FormatDouble(m.beta));
  cfg.Set(section, "epochs", std::to_string(m.epochs));
  cfg.Set(section, "batch_utterances", std::to_string(m.batch_utterances));
  cfg.Set(section, "seed", std::to_string(m.seed));
  cfg.Set(section, "learning_rate", FormatDouble(m.learning_rate));
  cfg.Set(section, "codebook_update",
          m.codebook_update == CodebookUpdate::kEma ? "ema" : "gradient");
  cfg.Set(section, "ema_decay", FormatDouble(m.ema_decay));
  cfg.Set(section, "laplace_eps", FormatDouble(m.laplace_eps));
  cfg.Set(section, "dead_code_threshold", FormatDouble(m.dead_code_threshold));
  cfg.Set(section, "train_fraction", FormatDouble(m.train_fraction));
}

Matrix Decimate(const Matrix& frames, int stride) {
  if (stride < 1) throw std::invalid_argument("Decimate: stride < 1");
  const Eigen::Index j = (frames.rows() + stride - 1) / stride;
  Matrix out(j, frames.cols());
  for (Eigen::Index r = 0; r < j; ++r) out.row(r) = frames.row(r * stride);
  return out;
}

std::vector<int> DecimateLabels(std::span<const int> labels, int stride) {
  if (stride < 1) throw std::invalid_argument("DecimateLabels: stride < 1");
  std::vector<int> out;
  for (size_t t = 0; t < labels.size(); t += static_cast<size_t>(stride)) {
    out.push_back(labels[t]);
  }
  return out;
}

BottleneckModel::BottleneckModel(const ModelConfig& config, int input_dim,
                                 int num_classes)
    : config_(config), input_dim_(input_dim), num_classes_(num_classes) {
  config_.Validate();
  if (input_dim < 1 || num_classes < 2) {
    throw ConfigError("model: need input_dim >= 1 and num_classes >= 2");
  }
  std::mt19937_64 rng = ModelRng(config_.seed, kInitStream);
  const int d = config_.hidden_dim;
  int in = input_dim;
  for (int l = 0; l < config_.encoder_depth; ++l) {
    const bool last = l + 1 == config_.encoder_depth;
    encoder_.push_back(MakeLayer(in, d, last ? 1.0 : 2.0, rng));
    in = d;
  }
  classifier_.push_back(MakeLayer(d, d, 2.0, rng));
  classifier_.push_back(MakeLayer(d, num_classes, 1.0, rng));
  if (has_codebook()) {
    // Placeholder until training seeds it from data.
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix protos(*config_.codebook_size, d);
    for (Eigen::Index i = 0; i < protos.size(); ++i) protos.data()[i] = normal(rng);
    codebook_ = Codebook::FromPrototypes(std::move(protos), config_.ema_decay,
                                         config_.laplace_eps);
  }
}

std::vector<Tensor2D*> BottleneckModel::Parameters() {
  std::vector<Tensor2D*> params;
  for (auto* layers : {&encoder_, &classifier_}) {
    for (DenseLayer& layer : *layers) {
      params.push_back(&layer.weight);
      params.push_back(&layer.bias);
    }
  }
  return params;
}

Matrix BottleneckModel::Encode(const Matrix& x) const {
  if (x.cols() != input_dim_) {
    throw ShapeError("model: frame dim " + std::to_string(x.cols()) +
                     " != input dim " + std::to_string(input_dim_));
  }
  Matrix a = x;
  for (size_t l = 0; l < encoder_.size(); ++l) {
    a = Apply(encoder_[l], a);
    if (l + 1 < encoder_.size()) a = a.cwiseMax(0.0);
  }
  return a;
}

Matrix BottleneckModel::Classify(const Matrix& z) const {
  Matrix a = Apply(classifier_[0], z).cwiseMax(0.0);
  return Apply(classifier_[1], a);
}

BottleneckModel::Output BottleneckModel::ForwardDecimated(const Matrix& x) const {
  Output out;
  out.h = Encode(x);
  if (has_codebook()) {
    QuantizedBatch qb = Quantize(out.h, codebook_);
    out.q = std::move(qb.q);
    out.indices = std::move(qb.indices);
  } else {
    out.q = out.h;
  }
  out.logits = Classify(out.q);
  return out;
}

BottleneckModel::Output BottleneckModel::Forward(const Matrix& frames) const {
  if (frames.cols() != input_dim_) {
    throw ShapeError("model: frame dim " + std::to_string(frames.cols()) +
                     " != input dim " + std::to_string(input_dim_));
  }
  return ForwardDecimated(Decimate(frames, config_.subsample_stride));
}

bool BottleneckModel::operator==(const BottleneckModel& other) const {
  if (!(config_ == other.config_) || input_dim_ != other.input_dim_ ||
      num_classes_ != other.num_classes_ ||
      !LayersEqual(encoder_, other.encoder_) ||
      !LayersEqual(classifier_, other.classifier_)) {
    return false;
  }
  if (!has_codebook()) return true;
  return codebook_.prototypes == other.codebook_.prototypes &&
         codebook_.ema_cluster_size == other.codebook_.ema_cluster_size &&
         codebook_.ema_embed_sum == other.codebook_.ema_embed_sum &&
         codebook_.decay == other.codebook_.decay &&
         codebook_.laplace_eps == other.codebook_.laplace_eps;
}

Matrix ExtractFeatures(const BottleneckModel& model, const Matrix& frames,
                       FeatureTap tap) {
  BottleneckModel::Output out = model.Forward(frames);
  return tap == FeatureTap::kPreVq ? std::move(out.h) : std::move(out.q);
}

std::vector<StepRecord> Train(BottleneckModel& model, const Corpus& corpus,
                              std::span<const int> train_utterances) {
  if (train_utterances.empty()) {
    throw std::invalid_argument("Train: empty training set");
  }
  const ModelConfig& cfg = model.config();
  const int stride = cfg.subsample_stride;
  std::mt19937_64 shuffle_rng = ModelRng(cfg.seed, kShuffleStream);
  std::mt19937_64 codebook_rng = ModelRng(cfg.seed, kCodebookInitStream);
  std::mt19937_64 reseed_rng = ModelRng(cfg.seed, kReseedStream);

  std::vector<int> order(train_utterances.begin(), train_utterances.end());
  auto make_batch = [&](size_t start, Matrix& x, std::vector<int>& y) {
    const size_t end =
        std::min(order.size(), start + static_cast<size_t>(cfg.batch_utterances));
    Eigen::Index rows = 0;
    for (size_t i = start; i < end; ++i) {
      rows += (corpus.utterances.at(static_cast<size_t>(order[i])).length() +
               stride - 1) / stride;
    }
    x.resize(rows, model.input_dim());
    y.clear();
    Eigen::Index r = 0;
    for (size_t i = start; i < end; ++i) {
      const FrameSequence& u = corpus.utterances[static_cast<size_t>(order[i])];
      Matrix d = Decimate(u.frames, stride);
      x.middleRows(r, d.rows()) = d;
      r += d.rows();
      std::vector<int> labels = DecimateLabels(u.content_labels, stride);
      y.insert(y.end(), labels.begin(), labels.end());
    }
  };

  std::shuffle(order.begin(), order.end(), shuffle_rng);
  Matrix x;
  std::vector<int> y;
  if (model.has_codebook()) {
    make_batch(0, x, y);
    model.codebook() = Codebook::FromFrames(model.Encode(x), *cfg.codebook_size,
                                            codebook_rng, cfg.ema_decay,
                                            cfg.laplace_eps);
  }

  const bool gradient_codebook =
      model.has_codebook() && cfg.codebook_update == CodebookUpdate::kGradient;
  Tensor2D prototypes;
  AdamState prototype_state;
  if (gradient_codebook) prototypes = Tensor2D(model.codebook().prototypes);

  Adam adam(model.Parameters(), AdamConfig{.learning_rate = cfg.learning_rate});
  std::vector<StepRecord> history;
  std::optional<LossBreakdown> last_finite;
  long step = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (epoch > 0) std::shuffle(order.begin(), order.end(), shuffle_rng);
    for (size_t start = 0; start < order.size();
         start += static_cast<size_t>(cfg.batch_utterances)) {
      make_batch(start, x, y);
      const double inv_n = 1.0 / (static_cast<double>(x.rows()) * cfg.hidden_dim);
      adam.ZeroGrad();

      Tape tape;
      Var a = tape.Constant(x);
      for (size_t l = 0; l < model.encoder().size(); ++l) {
        a = ApplyOnTape(tape, model.encoder()[l], a);
        if (l + 1 < model.encoder().size()) a = Relu(tape, a);
      }
      const Var h = a;
      Var z = h;
      Var objective_extra{};
      double l_vq = 0.0;
      double l_reg = 0.0;
      std::vector<int> indices;
      if (model.has_codebook()) {
        QuantizedBatch qb = Quantize(tape.value(h), model.codebook());
        indices = std::move(qb.indices);
        const Var q = tape.Constant(std::move(qb.q));
        z = StraightThrough(tape, h, q);
        const Var commit = Scale(tape, CommitmentLoss(tape, h, q), inv_n);
        l_reg = tape.value(commit)(0, 0);
        objective_extra = Scale(tape, commit, cfg.beta);
        if (gradient_codebook) {
          prototypes.ZeroGrad();
          prototypes.value = model.codebook().prototypes;
          const Var table = tape.Watch(prototypes);
          const Var vq = Scale(
              tape, VqLoss(tape, h, GatherRows(tape, table, indices)), inv_n);
          l_vq = tape.value(vq)(0, 0);
          objective_extra = Add(tape, objective_extra, vq);
        } else {
          l_vq = VqLossValue(tape.value(h), tape.value(q)) * inv_n;
        }
      }
      Var c = Relu(tape, ApplyOnTape(tape, model.classifier()[0], z));
      c = ApplyOnTape(tape, model.classifier()[1], c);
      const Var task = SoftmaxCrossEntropy(tape, c, y);
      const Var objective = model.has_codebook()
                                ? Add(tape, task, objective_extra)
                                : task;

      StepRecord record;
      record.step = step;
      record.epoch = epoch;
      record.loss = CombineLosses(tape.value(task)(0, 0), l_vq, l_reg, cfg.beta);
      if (!std::isfinite(record.loss.total) || !AllFinite(tape.value(h))) {
        std::ostringstream msg;
        msg << "non-finite loss at step " << step << " (epoch " << epoch
            << ", batch starting at utterance "
            << corpus.utterances[static_cast<size_t>(order[start])].utterance_id
            << ")";
        throw TrainingDivergedError(msg.str(), step, last_finite);
      }
      tape.Backward(objective);
      adam.Step();
      if (model.has_codebook()) {
        const Matrix& hv = tape.value(h);
        if (gradient_codebook) {
          AdamStep(prototypes, prototype_state, adam.config());
          model.codebook().prototypes = prototypes.value;
        } else {
          EmaUpdate(model.codebook(), hv, indices, cfg.ema_decay, cfg.laplace_eps);
          DeadCodeReseed(model.codebook(), hv, cfg.dead_code_threshold,
                         reseed_rng);
        }
        record.perplexity = CodebookPerplexity(indices, *cfg.codebook_size);
      } else {
        record.perplexity = 0.0;
      }
      last_finite = record.loss;
      history.push_back(record);
      ++step;
    }
  }
  return history;
}

ContentCounts CountContentErrors(const BottleneckModel& model,
                                 const Corpus& corpus,
                                 std::span<const int> utterances) {
  ContentCounts counts;
  for (int i : utterances) {
    const FrameSequence& u = corpus.utterances.at(static_cast<size_t>(i));
    const BottleneckModel::Output out = model.Forward(u.frames);
    const std::vector<int> labels =
        DecimateLabels(u.content_labels, model.config().subsample_stride);
    for (Eigen::Index j = 0; j < out.logits.rows(); ++j) {
      Eigen::Index best;
      out.logits.row(j).maxCoeff(&best);
      counts.errors += best != labels[static_cast<size_t>(j)] ? 1 : 0;
      ++counts.frames;
    }
  }
  return counts;
}

double ContentErrorRate(const BottleneckModel& model, const Corpus& corpus,
                        std::span<const int> utterances) {
  return CountContentErrors(model, corpus, utterances).rate();
}

void WriteCheckpoint(std::ostream& out, const BottleneckModel& model) {
  KeyValueConfig cfg;
  ModelConfigToKeyValues(model.config(), cfg);
  WriteMagic(out, kCheckpointMagic, kCheckpointVersion);
  WriteString(out, cfg.ToString());
  WriteU64(out, static_cast<uint64_t>(model.input_dim()));
  WriteU64(out, static_cast<uint64_t>(model.num_classes()));
  for (const auto* layers : {&model.encoder(), &model.classifier()}) {
    WriteU64(out, layers->size());
    for (const DenseLayer& layer : *layers) {
      WriteMatrix(out, layer.weight.value);
      WriteMatrix(out, layer.bias.value);
    }
  }
  WriteU64(out, model.has_codebook() ? 1 : 0);
  if (model.has_codebook()) WriteCodebook(out, model.codebook());
}

BottleneckModel ReadCheckpoint(std::istream& in) {
  const uint32_t version = ReadMagic(in, kCheckpointMagic);
  if (version != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version));
  }
  BottleneckModel model;
  try {
    model.config_ = ModelConfigFromKeyValues(KeyValueConfig::ParseString(ReadString(in)));
  } catch (const ConfigError& e) {
    throw FormatError(std::string("checkpoint config: ") + e.what());
  }
  model.input_dim_ = static_cast<int>(ReadU64(in));
  model.num_classes_ = static_cast<int>(ReadU64(in));
  for (auto* layers : {&model.encoder_, &model.classifier_}) {
    const uint64_t n = ReadU64(in);
    if (n > 64) throw FormatError("checkpoint: implausible layer count");
    for (uint64_t l = 0; l < n; ++l) {
      Matrix w = ReadMatrix(in);
      Matrix b = ReadMatrix(in);
      layers->push_back(DenseLayer{Tensor2D(std::move(w)), Tensor2D(std::move(b))});
    }
  }
  const bool has_codebook = ReadU64(in) != 0;
  if (has_codebook != model.config_.codebook_size.has_value() ||
      model.encoder_.size() != static_cast<size_t>(model.config_.encoder_depth) ||
      model.classifier_.size() != 2) {
    throw FormatError("checkpoint: structure disagrees with its config");
  }
  if (has_codebook) model.codebook_ = ReadCodebook(in);
  return model;
}

void SaveCheckpoint(const std::string& path, const BottleneckModel& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  WriteCheckpoint(out, model);
  if (!out) throw std::runtime_error("failed writing " + path);
}

BottleneckModel LoadCheckpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open checkpoint " + path);
  return ReadCheckpoint(in);
}

void WriteLossHistoryCsv(std::ostream& out, std::span<const StepRecord> history) {
  out << "step,task,l_vq,l_vq_reg,total,perplexity\n";
  for (const StepRecord& r : history) {
    out << r.step << ',' << FormatDouble(r.loss.task_loss) << ','
        << FormatDouble(r.loss.l_vq) << ',' << FormatDouble(r.loss.l_vq_reg)
        << ',' << FormatDouble(r.loss.total) << ',' << FormatDouble(r.perplexity)
        << '\n';
  }
}

}  // namespace vqlab
