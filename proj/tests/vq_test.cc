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

#include "vqlab/vq.h"

#include <cmath>
#include <random>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.h"
#include "vqlab/binary_io.h"

namespace vqlab {
namespace {

using oracle::RandomMatrix;

TEST(QuantizeTest, PicksNearestPrototype) {
  const Matrix e{{0.0, 0.0}, {1.0, 1.0}};
  const QuantizedBatch qb = Quantize(Matrix{{0.9, 0.8}}, e);
  EXPECT_EQ(qb.indices, std::vector<int>{1});
  EXPECT_EQ(qb.q, (Matrix{{1.0, 1.0}}));
}

TEST(QuantizeTest, ExactPrototypeHasZeroDistance) {
  const Matrix e{{0.0, 0.0}, {1.0, 1.0}, {2.0, 0.5}};
  const QuantizedBatch qb = Quantize(Matrix{{2.0, 0.5}}, e);
  EXPECT_EQ(qb.indices[0], 2);
  EXPECT_EQ(SquaredDistance(std::span<const double>(qb.q.data(), 2),
                            std::span<const double>(e.row(2).data(), 2)),
            0.0);
}

TEST(QuantizeTest, TiesGoToLowestIndex) {
  const Matrix e{{1.0, 0.0}, {-1.0, 0.0}, {1.0, 0.0}};
  const QuantizedBatch qb = Quantize(Matrix{{0.0, 0.0}, {1.0, 0.0}}, e);
  EXPECT_EQ(qb.indices, (std::vector<int>{0, 0}));
}

TEST(QuantizeTest, MatchesExhaustiveSearchOnRandomBatches) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const Matrix e = RandomMatrix(17, 6, rng);
    Matrix h = RandomMatrix(40, 6, rng);
    h.row(3) = e.row(5);  // exact hit
    const QuantizedBatch qb = Quantize(h, e);
    ASSERT_EQ(qb.indices, oracle::NearestPrototype(h, e));
    for (Eigen::Index j = 0; j < h.rows(); ++j) {
      ASSERT_EQ(qb.q.row(j), e.row(qb.indices[static_cast<size_t>(j)]));
    }
  }
}

TEST(QuantizeTest, NearTiesAreResolvedExactly) {
  // Prototypes nearly equidistant from every input: the shortlist must not
  // flip the decision because of rounding in the matrix product.
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    Matrix e = RandomMatrix(8, 5, rng, 1e3);
    e.row(1) = e.row(0);
    e(1, 0) += 1e-9;
    const Matrix h = e.topRows(3) + RandomMatrix(3, 5, rng, 1e-7);
    ASSERT_EQ(Quantize(h, e).indices, oracle::NearestPrototype(h, e));
  }
}

TEST(QuantizeTest, RejectsDimensionMismatch) {
  EXPECT_THROW(Quantize(Matrix::Zero(2, 3), Matrix::Zero(4, 2)), ShapeError);
}

TEST(StraightThroughTest, ForwardIsQBackwardCopiesGradient) {
  std::mt19937_64 rng(3);
  Tensor2D h(RandomMatrix(4, 3, rng));
  const Matrix q = RandomMatrix(4, 3, rng);
  const Matrix g = RandomMatrix(4, 3, rng);
  Tape tape;
  const Var hv = tape.Watch(h);
  const Var z = StraightThrough(tape, hv, tape.Constant(q));
  EXPECT_EQ(tape.value(z), q);
  tape.Backward(WeightedSum(tape, z, g));
  EXPECT_EQ(h.grad, g);
  EXPECT_EQ(h.grad, tape.grad(z));
}

TEST(StraightThroughTest, SumReadoutGivesOnes) {
  Tensor2D h(Matrix::Zero(2, 2));
  Tape tape;
  const Var z = StraightThrough(tape, tape.Watch(h), tape.Constant(Matrix::Ones(2, 2)));
  tape.Backward(Sum(tape, z));
  EXPECT_EQ(h.grad, Matrix::Ones(2, 2));
}

TEST(StraightThroughTest, NoGradientReachesPrototypes) {
  Tensor2D h(Matrix::Zero(2, 2));
  Tensor2D table(Matrix::Ones(3, 2));
  Tape tape;
  const std::vector<int> idx = {0, 2};
  const Var q = GatherRows(tape, tape.Watch(table), idx);
  tape.Backward(Sum(tape, StraightThrough(tape, tape.Watch(h), q)));
  EXPECT_TRUE(table.grad.isZero(0.0));
}

TEST(LossTest, HandComputedValues) {
  EXPECT_EQ(VqLossValue(Matrix{{1.0, 0.0}}, Matrix{{0.0, 0.0}}), 1.0);
  EXPECT_EQ(CommitmentLossValue(Matrix{{0.0, 3.0}}, Matrix{{0.0, 1.0}}), 4.0);
  EXPECT_EQ(VqLossValue(Matrix::Ones(3, 2), Matrix::Ones(3, 2)), 0.0);
}

TEST(LossTest, ValueSymmetryAndGradientSeparation) {
  std::mt19937_64 rng(5);
  Tensor2D h(RandomMatrix(6, 4, rng));
  Tensor2D q(RandomMatrix(6, 4, rng));
  Tape a;
  const Var vq = VqLoss(a, a.Watch(h), a.Watch(q));
  a.Backward(vq);
  EXPECT_TRUE(h.grad.isZero(0.0));
  EXPECT_TRUE(q.grad.isApprox(2.0 * (q.value - h.value), 1e-14));
  h.ZeroGrad();
  q.ZeroGrad();
  Tape b;
  const Var commit = CommitmentLoss(b, b.Watch(h), b.Watch(q));
  b.Backward(commit);
  EXPECT_TRUE(q.grad.isZero(0.0));
  EXPECT_TRUE(h.grad.isApprox(2.0 * (h.value - q.value), 1e-14));
  EXPECT_EQ(a.value(vq)(0, 0), b.value(commit)(0, 0));
}

TEST(LossTest, CombineLosses) {
  const LossBreakdown l = CombineLosses(1.0, 0.5, 0.4, 0.25);
  EXPECT_DOUBLE_EQ(l.total, 1.6);
  EXPECT_EQ(CombineLosses(1.0, 0.5, 0.4, 0.0).total, 1.5);
  EXPECT_EQ(CombineLosses(0.0, 0.0, 0.0).total, 0.0);
  EXPECT_EQ(CombineLosses(0.0, 0.0, 0.0).beta, 0.25);
  EXPECT_THROW(CombineLosses(1.0, 0.5, 0.4, -0.1), std::invalid_argument);
}

TEST(EmaTest, UpdateFollowsDefinition) {
  Codebook cb = Codebook::FromPrototypes(Matrix{{0.0, 0.0}, {10.0, 10.0}}, 0.5, 1e-5);
  const Matrix h{{1.0, 1.0}, {3.0, 1.0}, {9.0, 9.0}};
  const std::vector<int> idx = {0, 0, 1};
  EmaUpdate(cb, h, idx);
  // cluster sizes 0.5*1 + 0.5*{2,1} = {1.5, 1}; sums {(2,1), (9.5,9.5)}
  EXPECT_DOUBLE_EQ(cb.ema_cluster_size(0), 1.5);
  EXPECT_DOUBLE_EQ(cb.ema_cluster_size(1), 1.0);
  const double n = 2.5;
  const double s0 = (1.5 + 1e-5) / (n + 2e-5) * n;
  const double s1 = (1.0 + 1e-5) / (n + 2e-5) * n;
  EXPECT_DOUBLE_EQ(cb.prototypes(0, 0), 2.0 / s0);
  EXPECT_DOUBLE_EQ(cb.prototypes(0, 1), 1.0 / s0);
  EXPECT_DOUBLE_EQ(cb.prototypes(1, 0), 9.5 / s1);
}

TEST(EmaTest, SmallDecayTracksBatchCentroids) {
  std::mt19937_64 rng(9);
  const Matrix h = RandomMatrix(60, 3, rng);
  Codebook cb = Codebook::FromFrames(h, 4, rng, 1e-9, 1e-5);
  const std::vector<int> idx = Quantize(h, cb).indices;
  EmaUpdate(cb, h, idx);
  const Matrix expected = oracle::Centroids(h, idx, cb.prototypes);
  for (Eigen::Index i = 0; i < 4; ++i) {
    if (std::count(idx.begin(), idx.end(), static_cast<int>(i)) == 0) continue;
    EXPECT_LT((cb.prototypes.row(i) - expected.row(i)).norm(), 1e-4);
  }
}

TEST(EmaTest, RepeatedUpdatesReachLloydFixedPoint) {
  std::mt19937_64 rng(21);
  Matrix h(400, 4);
  const Matrix centres = RandomMatrix(4, 4, rng, 5.0);
  const Matrix noise = RandomMatrix(400, 4, rng, 0.3);
  for (Eigen::Index j = 0; j < h.rows(); ++j) h.row(j) = centres.row(j % 4) + noise.row(j);
  Codebook cb = Codebook::FromFrames(h, 4, rng, 0.9, 1e-5);
  std::vector<int> idx;
  for (int step = 0; step < 500; ++step) {
    idx = Quantize(h, cb).indices;
    EmaUpdate(cb, h, idx, 0.9, 1e-5);
  }
  const Matrix lloyd = oracle::Centroids(h, idx, cb.prototypes);
  EXPECT_EQ(oracle::NearestPrototype(h, lloyd), idx);
  EXPECT_LT((cb.prototypes - lloyd).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(EmaTest, UnusedPrototypeStaysFinite) {
  Codebook cb = Codebook::FromPrototypes(Matrix{{0.0}, {100.0}}, 0.9, 1e-5);
  const Matrix h{{1.0}, {2.0}};
  const std::vector<int> idx = {0, 0};
  for (int i = 0; i < 2000; ++i) EmaUpdate(cb, h, idx);
  EXPECT_TRUE(cb.prototypes.allFinite());
  EXPECT_GE(cb.ema_cluster_size.minCoeff(), 0.0);
}

TEST(DeadCodeTest, NothingBelowThresholdLeavesCodebook) {
  std::mt19937_64 rng(1);
  Codebook cb = Codebook::FromPrototypes(Matrix{{0.0, 1.0}, {2.0, 3.0}});
  const Codebook before = cb;
  EXPECT_EQ(DeadCodeReseed(cb, Matrix::Ones(3, 2), 1e-3, rng), 0);
  EXPECT_EQ(cb.prototypes, before.prototypes);
}

TEST(DeadCodeTest, DeadPrototypeIsReplacedByAFrame) {
  std::mt19937_64 rng(1);
  Codebook cb = Codebook::FromPrototypes(Matrix{{0.0, 1.0}, {2.0, 3.0}});
  cb.ema_cluster_size(1) = 1e-6;
  const Matrix h{{5.0, 5.0}, {6.0, 6.0}};
  EXPECT_EQ(DeadCodeReseed(cb, h, 1e-3, rng), 1);
  EXPECT_TRUE(cb.prototypes.row(1) == h.row(0) || cb.prototypes.row(1) == h.row(1));
  EXPECT_EQ(cb.ema_cluster_size(1), 1.0);
  EXPECT_EQ(cb.ema_embed_sum.row(1), cb.prototypes.row(1));
}

TEST(DeadCodeTest, ReseedingRarelyLowersPerplexity) {
  int not_lower = 0;
  for (uint64_t seed = 0; seed < 50; ++seed) {
    std::mt19937_64 rng(seed);
    const Matrix h = RandomMatrix(200, 3, rng);
    Codebook cb = Codebook::FromFrames(h, 8, rng);
    // Collapse half the dictionary far away from the data.
    for (int i = 0; i < 4; ++i) {
      cb.prototypes.row(i).setConstant(100.0 + i);
      cb.ema_embed_sum.row(i) = cb.prototypes.row(i);
      cb.ema_cluster_size(i) = 1e-6;
    }
    const double before = CodebookPerplexity(Quantize(h, cb).indices, 8);
    DeadCodeReseed(cb, h, kDefaultDeadCodeThreshold, rng);
    const double after = CodebookPerplexity(Quantize(h, cb).indices, 8);
    not_lower += after >= before ? 1 : 0;
  }
  EXPECT_GE(not_lower, 45);
}

TEST(PerplexityTest, KnownDistributions) {
  EXPECT_DOUBLE_EQ(CodebookPerplexity(std::vector<int>(10, 3), 8), 1.0);
  std::vector<int> uniform(64);
  for (int i = 0; i < 64; ++i) uniform[static_cast<size_t>(i)] = i;
  EXPECT_NEAR(CodebookPerplexity(uniform, 64), 64.0, 1e-12);
  EXPECT_NEAR(CodebookPerplexity(std::vector<int>{0, 0, 0, 1}, 2), 1.7548, 1e-4);
}

TEST(CodebookIoTest, RoundTripIsExact) {
  std::mt19937_64 rng(2);
  Codebook cb = Codebook::FromFrames(RandomMatrix(30, 5, rng), 7, rng, 0.95, 2e-5);
  EmaUpdate(cb, RandomMatrix(30, 5, rng), Quantize(RandomMatrix(30, 5, rng), cb).indices);
  std::stringstream buf;
  WriteCodebook(buf, cb);
  const std::string bytes = buf.str();
  EXPECT_EQ(bytes.substr(0, 4), "VQCB");
  const Codebook back = ReadCodebook(buf);
  EXPECT_EQ(back.prototypes, cb.prototypes);
  EXPECT_EQ(back.ema_cluster_size, cb.ema_cluster_size);
  EXPECT_EQ(back.ema_embed_sum, cb.ema_embed_sum);
  EXPECT_EQ(back.decay, cb.decay);
  EXPECT_EQ(back.laplace_eps, cb.laplace_eps);
}

TEST(CodebookIoTest, RejectsBadMagic) {
  std::stringstream buf("XXXX\x01\x00\x00\x00");
  EXPECT_THROW(ReadCodebook(buf), FormatError);
}

}  // namespace
}  // namespace vqlab
