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

// Encoder -> VQ bottleneck -> content classifier, trained with frame-level
// cross-entropy plus the commitment term, with an EMA-learned dictionary.

#ifndef VQLAB_MODEL_H_
#define VQLAB_MODEL_H_

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "vqlab/autodiff.h"
#include "vqlab/config.h"
#include "vqlab/corpus.h"
#include "vqlab/vq.h"

namespace vqlab {

enum class CodebookUpdate { kEma, kGradient };
enum class FeatureTap { kPreVq, kPostVq };

std::string ToString(FeatureTap tap);
FeatureTap ParseFeatureTap(const std::string& text);

struct ModelConfig {
  int encoder_depth = 3;
  int hidden_dim = 256;
  std::optional<int> codebook_size = 64;  // nullopt: identity bottleneck
  int subsample_stride = 3;
  double beta = kDefaultBeta;
  int epochs = 6;
  int batch_utterances = 8;
  uint64_t seed = 1;
  double learning_rate = 1e-3;
  CodebookUpdate codebook_update = CodebookUpdate::kEma;
  double ema_decay = kDefaultEmaDecay;
  double laplace_eps = kDefaultLaplaceEps;
  double dead_code_threshold = kDefaultDeadCodeThreshold;
  double train_fraction = 0.8;

  void Validate() const;  // throws ConfigError
  bool operator==(const ModelConfig&) const = default;
};

ModelConfig ModelConfigFromKeyValues(const KeyValueConfig& cfg,
                                     const std::string& section = "model");
void ModelConfigToKeyValues(const ModelConfig& config, KeyValueConfig& cfg,
                            const std::string& section = "model");

struct DenseLayer {
  Tensor2D weight;  // in x out
  Tensor2D bias;    // 1 x out
};

// Every stride-th row starting at row 0; ceil(T / stride) rows.
Matrix Decimate(const Matrix& frames, int stride);
std::vector<int> DecimateLabels(std::span<const int> labels, int stride);

class BottleneckModel {
 public:
  struct Output {
    Matrix logits;             // J x C
    Matrix h;                  // J x D
    Matrix q;                  // J x D; equals h without a codebook
    std::vector<int> indices;  // J; empty without a codebook
  };

  BottleneckModel(const ModelConfig& config, int input_dim, int num_classes);

  const ModelConfig& config() const { return config_; }
  int input_dim() const { return input_dim_; }
  int num_classes() const { return num_classes_; }
  bool has_codebook() const { return config_.codebook_size.has_value(); }

  Codebook& codebook() { return codebook_; }
  const Codebook& codebook() const { return codebook_; }
  std::vector<DenseLayer>& encoder() { return encoder_; }
  const std::vector<DenseLayer>& encoder() const { return encoder_; }
  std::vector<DenseLayer>& classifier() { return classifier_; }
  const std::vector<DenseLayer>& classifier() const { return classifier_; }

  // Encoder and classifier weights, in a fixed order.
  std::vector<Tensor2D*> Parameters();

  // Decimates `frames` (T x F) by the configured stride, then runs the net.
  Output Forward(const Matrix& frames) const;
  // Runs the net on already-decimated frames.
  Output ForwardDecimated(const Matrix& x) const;
  Matrix Encode(const Matrix& x) const;
  Matrix Classify(const Matrix& z) const;

  bool operator==(const BottleneckModel& other) const;

 private:
  friend BottleneckModel ReadCheckpoint(std::istream& in);
  BottleneckModel() = default;

  ModelConfig config_;
  int input_dim_ = 0;
  int num_classes_ = 0;
  std::vector<DenseLayer> encoder_;
  std::vector<DenseLayer> classifier_;
  Codebook codebook_;
};

// J x D features at the requested tap.
Matrix ExtractFeatures(const BottleneckModel& model, const Matrix& frames,
                       FeatureTap tap);

struct StepRecord {
  long step = 0;
  int epoch = 0;
  LossBreakdown loss;
  double perplexity = 1.0;
};

class TrainingDivergedError : public std::runtime_error {
 public:
  TrainingDivergedError(const std::string& what, long step,
                        std::optional<LossBreakdown> last_finite)
      : std::runtime_error(what), step_(step), last_finite_(last_finite) {}
  long step() const { return step_; }
  const std::optional<LossBreakdown>& last_finite() const { return last_finite_; }

 private:
  long step_;
  std::optional<LossBreakdown> last_finite_;
};

// Per step: cross-entropy on decimated labels + beta * commitment, Adam on
// the network, then the EMA dictionary update and dead-code reseeding.
// Reported l_vq / l_vq_reg are the summed losses divided by J * D. The
// codebook is initialized from V distinct latents of the first batch.
std::vector<StepRecord> Train(BottleneckModel& model, const Corpus& corpus,
                              std::span<const int> train_utterances);

struct ContentCounts {
  long errors = 0;
  long frames = 0;
  double rate() const {
    return frames == 0 ? 0.0 : static_cast<double>(errors) / frames;
  }
};

// Frame-level argmax error over decimated labels of the given utterances.
ContentCounts CountContentErrors(const BottleneckModel& model,
                                 const Corpus& corpus,
                                 std::span<const int> utterances);
double ContentErrorRate(const BottleneckModel& model, const Corpus& corpus,
                        std::span<const int> utterances);

// Binary checkpoint: "VQAM" + uint32 version, the config as key=value text,
// dimensions, all layer matrices and the embedded codebook record.
void WriteCheckpoint(std::ostream& out, const BottleneckModel& model);
BottleneckModel ReadCheckpoint(std::istream& in);
void SaveCheckpoint(const std::string& path, const BottleneckModel& model);
BottleneckModel LoadCheckpoint(const std::string& path);

void WriteLossHistoryCsv(std::ostream& out, std::span<const StepRecord> history);

}  // namespace vqlab

#endif  // VQLAB_MODEL_H_
