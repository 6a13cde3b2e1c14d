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

#include "vqlab/f0.h"

#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "vqlab/binary_io.h"
#include "vqlab/corpus.h"

namespace vqlab {
namespace {

F0Track MakeTrack(std::vector<double> values) {
  F0Track t;
  for (double v : values) {
    t.values.push_back(v);
    t.voiced.push_back(v != 0.0);
  }
  return t;
}

F0Track LongTrack(uint64_t seed, int length) {
  SpeakerProfile s;
  s.f0_mean = 140.0;
  s.f0_std = 25.0;
  std::mt19937_64 rng(seed);
  return GenerateF0Track(s, length, rng);
}

TEST(F0StatsTest, HandComputedExamples) {
  const F0Stats flat = ComputeF0Stats(MakeTrack({100.0, 100.0, 100.0}));
  EXPECT_EQ(flat.mean, 100.0);
  EXPECT_EQ(flat.std, 0.0);
  const F0Stats pair = ComputeF0Stats(MakeTrack({90.0, 110.0}));
  EXPECT_DOUBLE_EQ(pair.mean, 100.0);
  EXPECT_DOUBLE_EQ(pair.std, 10.0);
  const F0Stats masked = ComputeF0Stats(MakeTrack({0.0, 100.0, 100.0}));
  EXPECT_EQ(masked.mean, 100.0);
  EXPECT_EQ(masked.voiced_count, 2u);
}

TEST(F0StatsTest, NeedsTwoVoicedFrames) {
  EXPECT_THROW(ComputeF0Stats(MakeTrack({0.0, 120.0, 0.0})), DegenerateF0Error);
}

TEST(LinearShiftTest, HandComputedValue) {
  const F0Track out = LinearShift(MakeTrack({110.0, 0.0}), F0Stats{100.0, 10.0, 0},
                                  F0Stats{200.0, 20.0, 0});
  EXPECT_DOUBLE_EQ(out.values[0], 220.0);
  EXPECT_EQ(out.values[1], 0.0);
  EXPECT_FALSE(out.voiced[1]);
}

TEST(LinearShiftTest, IdentityStatsReturnInput) {
  const F0Track t = LongTrack(1, 500);
  const F0Stats s = ComputeF0Stats(t);
  const F0Track out = LinearShift(t, s, s);
  EXPECT_EQ(out.values, t.values);
  EXPECT_EQ(out.voiced, t.voiced);
}

TEST(LinearShiftTest, HitsTargetStatsExactly) {
  for (uint64_t seed = 0; seed < 20; ++seed) {
    const F0Track t = LongTrack(seed, 2000);
    const F0Stats tgt{210.0 + seed, 17.5 + 0.5 * seed, 0};
    const F0Stats got = ComputeF0Stats(LinearShift(t, ComputeF0Stats(t), tgt));
    EXPECT_NEAR(got.mean, tgt.mean, 1e-9);
    EXPECT_NEAR(got.std, tgt.std, 1e-9);
  }
}

TEST(LinearShiftTest, InvertibleRoundTrip) {
  const F0Track t = LongTrack(3, 1000);
  const F0Stats src = ComputeF0Stats(t);
  const F0Stats tgt{180.0, 30.0, 0};
  const F0Track back = LinearShift(LinearShift(t, src, tgt), tgt, src);
  for (size_t i = 0; i < t.size(); ++i) EXPECT_NEAR(back.values[i], t.values[i], 1e-9);
  EXPECT_EQ(back.voiced, t.voiced);
}

TEST(LinearShiftTest, DegenerateSourceRejected) {
  EXPECT_THROW(LinearShift(MakeTrack({100.0, 100.0}), F0Stats{100.0, 0.0, 2},
                           F0Stats{150.0, 10.0, 0}),
               DegenerateF0Error);
}

TEST(AwgnTest, NoiseStdHandComputation) {
  EXPECT_NEAR(NoiseStdForSnr(400.0, 15.0), std::sqrt(400.0 / std::pow(10.0, 1.5)), 1e-12);
  EXPECT_NEAR(NoiseStdForSnr(400.0, 15.0), 3.557, 1e-3);
}

TEST(AwgnTest, InfiniteSnrIsIdentity) {
  const F0Track t = LongTrack(4, 400);
  std::mt19937_64 rng(1);
  const F0Track out = AddAwgn(t, std::numeric_limits<double>::infinity(), rng);
  EXPECT_EQ(out.values, t.values);
}

TEST(AwgnTest, UnvoicedUntouchedAndFloorApplied) {
  const F0Track t = LongTrack(5, 3000);
  std::mt19937_64 rng(2);
  const F0Track out = AddAwgn(t, -20.0, rng);  // huge noise exercises the floor
  EXPECT_EQ(out.voiced, t.voiced);
  for (size_t i = 0; i < t.size(); ++i) {
    if (!t.voiced[i]) {
      EXPECT_EQ(out.values[i], 0.0);
    } else {
      EXPECT_GE(out.values[i], 1.0);
    }
  }
}

TEST(AwgnTest, MeasuredSnrNearNominalOnLongTracks) {
  for (uint64_t seed = 0; seed < 10; ++seed) {
    const F0Track t = LongTrack(seed, 20000);
    ASSERT_GE(t.voiced_count(), 10000u);
    std::mt19937_64 rng(seed + 100);
    const F0Track noisy = AddAwgn(t, 15.0, rng);
    EXPECT_NEAR(MeasuredSnr(t, noisy), 15.0, 0.5);
  }
}

TEST(AwgnTest, DoublingNoiseLowersSnrBySixDb) {
  const F0Track t = LongTrack(8, 30000);
  std::mt19937_64 a(1), b(1);
  const double s1 = MeasuredSnr(t, AddAwgn(t, 20.0, a));
  const double s2 = MeasuredSnr(t, AddAwgn(t, 20.0 - 20.0 * std::log10(2.0), b));
  EXPECT_NEAR(s1 - s2, 6.02, 0.05);
}

TEST(AwgnTest, MeanSquareReference) {
  const F0Track t = LongTrack(6, 20000);
  std::mt19937_64 rng(3);
  const F0Track noisy = AddAwgn(t, 15.0, rng, SnrReference::kMeanSquare);
  EXPECT_NEAR(MeasuredSnr(t, noisy, SnrReference::kMeanSquare), 15.0, 0.5);
}

TEST(AwgnTest, ErrorCases) {
  std::mt19937_64 rng(1);
  EXPECT_THROW(AddAwgn(MakeTrack({100.0, 100.0, 100.0}), 15.0, rng), DegenerateF0Error);
  const F0Track t = LongTrack(1, 200);
  EXPECT_THROW(MeasuredSnr(t, t), DegenerateF0Error);
  F0Track other = t;
  other.voiced[0] = !other.voiced[0];
  other.values[0] = other.voiced[0] ? 100.0 : 0.0;
  EXPECT_THROW(MeasuredSnr(t, other), std::invalid_argument);
}

TEST(F0IoTest, RoundTripIsExact) {
  const F0Track t = LongTrack(9, 300);
  std::stringstream buf;
  WriteF0Track(buf, t);
  const F0Track back = ReadF0Track(buf);
  EXPECT_EQ(back.values, t.values);
  EXPECT_EQ(back.voiced, t.voiced);
}

TEST(F0IoTest, MalformedInputRejected) {
  std::stringstream bad("120.5 1\nabc 0\n");
  EXPECT_THROW(ReadF0Track(bad), FormatError);
  std::stringstream inconsistent("0 1\n");
  EXPECT_THROW(ReadF0Track(inconsistent), FormatError);
}

}  // namespace
}  // namespace vqlab
