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

#include "vqlab/probe.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <set>
#include <stdexcept>
#include <utility>

namespace vqlab {

LinearProbe LinearProbe::Fit(const Matrix& features, std::span<const int> labels,
                             int num_classes, const ProbeConfig& config) {
  if (static_cast<Eigen::Index>(labels.size()) != features.rows() ||
      features.rows() == 0) {
    throw ShapeError("LinearProbe: " + std::to_string(labels.size()) +
                     " labels for features " + ShapeString(features));
  }
  std::set<int> distinct;
  for (int y : labels) {
    if (y < 0 || y >= num_classes) {
      throw std::out_of_range("LinearProbe: label " + std::to_string(y) +
                              " outside [0, " + std::to_string(num_classes) + ")");
    }
    distinct.insert(y);
  }
  if (distinct.size() < 2) {
    throw std::invalid_argument("LinearProbe: need at least two classes");
  }

  LinearProbe probe;
  probe.mean_ = features.colwise().mean().transpose();
  probe.inv_std_.resize(features.cols());
  for (Eigen::Index c = 0; c < features.cols(); ++c) {
    const double var =
        (features.col(c).array() - probe.mean_(c)).square().mean();
    probe.inv_std_(c) = var > 1e-24 ? 1.0 / std::sqrt(var) : 0.0;
  }
  const Matrix x = probe.Standardize(features);
  probe.weight_ = Tensor2D(Matrix::Zero(features.cols(), num_classes));
  probe.bias_ = Tensor2D(Matrix::Zero(1, num_classes));

  Adam adam({&probe.weight_, &probe.bias_},
            AdamConfig{.learning_rate = config.learning_rate});
  double previous = std::numeric_limits<double>::infinity();
  int quiet = 0;
  for (int it = 0; it < config.max_iterations; ++it) {
    adam.ZeroGrad();
    Tape tape;
    const Var w = tape.Watch(probe.weight_);
    const Var logits = Linear(tape, tape.Constant(x), w, tape.Watch(probe.bias_));
    const Var loss = Add(tape, SoftmaxCrossEntropy(tape, logits, labels),
                         Scale(tape, SumSquares(tape, w), 0.5 * config.l2));
    tape.Backward(loss);
    adam.Step();
    probe.iterations_ = it + 1;
    const double current = tape.value(loss)(0, 0);
    if (previous - current < config.tolerance * std::max(1.0, std::abs(current))) {
      if (++quiet >= 10) break;
    } else {
      quiet = 0;
    }
    previous = current;
  }
  return probe;
}

Matrix LinearProbe::Standardize(const Matrix& features) const {
  if (features.cols() != mean_.size()) {
    throw ShapeError("LinearProbe: feature dim " + std::to_string(features.cols()) +
                     " != " + std::to_string(mean_.size()));
  }
  Matrix x = features;
  x.rowwise() -= mean_.transpose();
  x.array().rowwise() *= inv_std_.transpose().array();
  return x;
}

std::vector<int> LinearProbe::Predict(const Matrix& features) const {
  Matrix logits = Standardize(features) * weight_.value;
  logits.rowwise() += bias_.value.row(0);
  std::vector<int> out(static_cast<size_t>(logits.rows()));
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    Eigen::Index best;
    logits.row(r).maxCoeff(&best);
    out[static_cast<size_t>(r)] = static_cast<int>(best);
  }
  return out;
}

double LinearProbe::Accuracy(const Matrix& features,
                             std::span<const int> labels) const {
  const std::vector<int> pred = Predict(features);
  if (pred.size() != labels.size() || pred.empty()) {
    throw ShapeError("LinearProbe::Accuracy: label count mismatch");
  }
  size_t hits = 0;
  for (size_t i = 0; i < pred.size(); ++i) hits += pred[i] == labels[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(pred.size());
}

Vector MeanPool(const Matrix& features) {
  if (features.rows() < 1) throw ShapeError("MeanPool: no frames");
  return features.colwise().mean().transpose();
}

Vector UtteranceEmbedding(const Matrix& features) {
  Vector v = MeanPool(features);
  const double norm = v.norm();
  if (norm > 0.0) v /= norm;
  return v;
}

double CosineScore(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) {
    throw ShapeError("CosineScore: dims " + std::to_string(a.size()) + " vs " +
                     std::to_string(b.size()));
  }
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::clamp(a.dot(b) / (na * nb), -1.0, 1.0);
}

ScoreSet ScoreTrials(std::span<const Vector> embeddings,
                     std::span<const int> speakers, uint64_t seed) {
  if (embeddings.size() != speakers.size()) {
    throw ShapeError("ScoreTrials: embeddings/speakers length mismatch");
  }
  ScoreSet scores;
  std::vector<std::pair<int, int>> different;
  const int n = static_cast<int>(embeddings.size());
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (speakers[static_cast<size_t>(i)] == speakers[static_cast<size_t>(j)]) {
        scores.mated.push_back(CosineScore(embeddings[static_cast<size_t>(i)],
                                           embeddings[static_cast<size_t>(j)]));
      } else {
        different.emplace_back(i, j);
      }
    }
  }
  if (scores.mated.empty()) {
    throw std::invalid_argument(
        "ScoreTrials: no speaker has two utterances, no mated trials");
  }
  const size_t cap = kNonmatedPerMated * scores.mated.size();
  if (different.size() > cap) {
    std::mt19937_64 rng(seed);
    for (size_t k = 0; k < cap; ++k) {
      std::uniform_int_distribution<size_t> pick(k, different.size() - 1);
      std::swap(different[k], different[pick(rng)]);
    }
    different.resize(cap);
    std::sort(different.begin(), different.end());
  }
  scores.nonmated.reserve(different.size());
  for (const auto& [i, j] : different) {
    scores.nonmated.push_back(CosineScore(embeddings[static_cast<size_t>(i)],
                                          embeddings[static_cast<size_t>(j)]));
  }
  return scores;
}

}  // namespace vqlab
