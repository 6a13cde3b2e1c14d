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

// Attacker-side tools: a linear softmax probe on frozen features, utterance
// embeddings and cosine trial scoring.

#ifndef VQLAB_PROBE_H_
#define VQLAB_PROBE_H_

#include <cstdint>
#include <span>
#include <vector>

#include "vqlab/autodiff.h"
#include "vqlab/metrics.h"

namespace vqlab {

struct ProbeConfig {
  int max_iterations = 400;
  double learning_rate = 0.05;
  double l2 = 1e-4;
  // Stop once the loss improves by less than this (relative) for 10
  // consecutive iterations.
  double tolerance = 1e-6;
};

// Multinomial logistic regression on z-scored features, trained full-batch
// with Adam from zero weights. Deterministic for fixed inputs.
class LinearProbe {
 public:
  // Throws std::invalid_argument when fewer than two classes are present.
  static LinearProbe Fit(const Matrix& features, std::span<const int> labels,
                         int num_classes, const ProbeConfig& config = {});

  std::vector<int> Predict(const Matrix& features) const;
  double Accuracy(const Matrix& features, std::span<const int> labels) const;
  int iterations() const { return iterations_; }

 private:
  Matrix Standardize(const Matrix& features) const;

  Vector mean_;
  Vector inv_std_;
  Tensor2D weight_;
  Tensor2D bias_;
  int iterations_ = 0;
};

// Mean over frames, scaled to unit Euclidean norm (a zero mean stays zero).
Vector UtteranceEmbedding(const Matrix& features);
// Mean over frames without normalization.
Vector MeanPool(const Matrix& features);

// Cosine similarity in [-1, 1]; 0 when either side is the zero vector.
double CosineScore(const Vector& a, const Vector& b);

inline constexpr int kNonmatedPerMated = 10;

// Mated: every same-speaker pair (i < j). Non-mated: a seeded sample of
// different-speaker pairs, at most kNonmatedPerMated times the mated count.
ScoreSet ScoreTrials(std::span<const Vector> embeddings,
                     std::span<const int> speakers, uint64_t seed);

}  // namespace vqlab

#endif  // VQLAB_PROBE_H_
