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
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "oracles.h"

namespace vqlab {
namespace {

TEST(ProbeTest, SeparableClustersAreLearned) {
  std::mt19937_64 rng(1);
  const Matrix centers = oracle::RandomMatrix(4, 6, rng, 3.0);
  Matrix x(200, 6);
  std::vector<int> y(200);
  std::normal_distribution<double> noise(0.0, 0.3);
  for (int i = 0; i < 200; ++i) {
    y[static_cast<size_t>(i)] = i % 4;
    for (int d = 0; d < 6; ++d) x(i, d) = centers(i % 4, d) + noise(rng);
  }
  const LinearProbe probe = LinearProbe::Fit(x, y, 4);
  EXPECT_EQ(probe.Accuracy(x, y), 1.0);
  EXPECT_GT(probe.iterations(), 0);
}

TEST(ProbeTest, NoSignalIsNearChance) {
  std::mt19937_64 rng(2);
  const Matrix train = oracle::RandomMatrix(400, 5, rng);
  const Matrix test = oracle::RandomMatrix(4000, 5, rng);
  std::vector<int> ytrain(400), ytest(4000);
  for (size_t i = 0; i < ytrain.size(); ++i) ytrain[i] = static_cast<int>(i % 4);
  for (size_t i = 0; i < ytest.size(); ++i) ytest[i] = static_cast<int>(i % 4);
  const LinearProbe probe = LinearProbe::Fit(train, ytrain, 4);
  EXPECT_NEAR(probe.Accuracy(test, ytest), 0.25, 0.05);
}

TEST(ProbeTest, ConstantFeatureColumnIsHarmless) {
  Matrix x(4, 2);
  x << 7.0, -1.0, 7.0, -1.2, 7.0, 1.0, 7.0, 1.2;
  const std::vector<int> y = {0, 0, 1, 1};
  const LinearProbe probe = LinearProbe::Fit(x, y, 2);
  EXPECT_EQ(probe.Accuracy(x, y), 1.0);
}

TEST(ProbeTest, ErrorCases) {
  const Matrix x = Matrix::Zero(3, 2);
  EXPECT_THROW(LinearProbe::Fit(x, std::vector<int>{0, 0, 0}, 2), std::invalid_argument);
  EXPECT_THROW(LinearProbe::Fit(x, std::vector<int>{0, 1}, 2), ShapeError);
  EXPECT_THROW(LinearProbe::Fit(x, std::vector<int>{0, 1, 2}, 2), std::out_of_range);
  const LinearProbe probe = LinearProbe::Fit(x, std::vector<int>{0, 1, 1}, 2);
  EXPECT_THROW(probe.Predict(Matrix::Zero(1, 3)), ShapeError);
}

TEST(ProbeTest, Deterministic) {
  std::mt19937_64 rng(3);
  const Matrix x = oracle::RandomMatrix(50, 4, rng);
  std::vector<int> y(50);
  for (size_t i = 0; i < y.size(); ++i) y[i] = static_cast<int>(i % 3);
  const LinearProbe a = LinearProbe::Fit(x, y, 3);
  const LinearProbe b = LinearProbe::Fit(x, y, 3);
  EXPECT_EQ(a.Predict(x), b.Predict(x));
  EXPECT_EQ(a.iterations(), b.iterations());
}

TEST(EmbeddingTest, MeanPoolAndNormalize) {
  Matrix f(2, 2);
  f << 3.0, 0.0, 3.0, 8.0;
  EXPECT_EQ(MeanPool(f), Vector((Vector(2) << 3.0, 4.0).finished()));
  const Vector e = UtteranceEmbedding(f);
  EXPECT_DOUBLE_EQ(e(0), 0.6);
  EXPECT_DOUBLE_EQ(e(1), 0.8);
  EXPECT_EQ(UtteranceEmbedding(Matrix::Zero(3, 2)), Vector::Zero(2));
}

TEST(CosineTest, HandValues) {
  const Vector a = (Vector(2) << 1.0, 0.0).finished();
  const Vector b = (Vector(2) << 0.0, 2.0).finished();
  EXPECT_DOUBLE_EQ(CosineScore(a, a), 1.0);
  EXPECT_DOUBLE_EQ(CosineScore(a, b), 0.0);
  EXPECT_DOUBLE_EQ(CosineScore(a, -a), -1.0);
  EXPECT_EQ(CosineScore(a, Vector::Zero(2)), 0.0);
}

TEST(TrialTest, MatedAreAllSameSpeakerPairs) {
  std::mt19937_64 rng(4);
  std::vector<Vector> emb;
  const std::vector<int> spk = {0, 0, 0, 1, 1, 2};
  for (size_t i = 0; i < spk.size(); ++i) emb.push_back(oracle::RandomMatrix(3, 1, rng));
  const ScoreSet s = ScoreTrials(emb, spk, 1);
  EXPECT_EQ(s.mated.size(), 4u);      // 3 + 1
  EXPECT_EQ(s.nonmated.size(), 11u);  // 15 pairs - 4 mated, under the 10x cap
  std::multiset<double> expected;
  for (size_t i = 0; i < spk.size(); ++i) {
    for (size_t j = i + 1; j < spk.size(); ++j) {
      if (spk[i] == spk[j]) expected.insert(CosineScore(emb[i], emb[j]));
    }
  }
  EXPECT_EQ(std::multiset<double>(s.mated.begin(), s.mated.end()), expected);
}

TEST(TrialTest, NonmatedCappedAndSeeded) {
  std::mt19937_64 rng(5);
  std::vector<Vector> emb;
  std::vector<int> spk;
  for (int s = 0; s < 20; ++s) {
    for (int u = 0; u < 2; ++u) {
      spk.push_back(s);
      emb.push_back(oracle::RandomMatrix(4, 1, rng));
    }
  }
  const ScoreSet a = ScoreTrials(emb, spk, 9);
  const ScoreSet b = ScoreTrials(emb, spk, 9);
  const ScoreSet c = ScoreTrials(emb, spk, 10);
  EXPECT_EQ(a.mated.size(), 20u);
  EXPECT_EQ(a.nonmated.size(), 200u);
  EXPECT_EQ(a.nonmated, b.nonmated);
  EXPECT_NE(a.nonmated, c.nonmated);
}

TEST(TrialTest, NoMatedPairsRejected) {
  const std::vector<Vector> emb = {Vector::Ones(2), Vector::Ones(2)};
  EXPECT_THROW(ScoreTrials(emb, std::vector<int>{0, 1}, 1), std::invalid_argument);
}

}  // namespace
}  // namespace vqlab
