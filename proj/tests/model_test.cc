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
#include <numeric>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "vqlab/binary_io.h"
#include "vqlab/corpus.h"

namespace vqlab {
namespace {

CorpusConfig TinyCorpus() {
  CorpusConfig c;
  c.num_speakers = 4;
  c.num_content_classes = 6;
  c.frame_dim = 8;
  c.utterances_per_speaker = 10;
  c.frames_per_utterance = 60;
  c.seed = 2;
  return c;
}

ModelConfig TinyModel(std::optional<int> v = 16) {
  ModelConfig m;
  m.encoder_depth = 2;
  m.hidden_dim = 16;
  m.codebook_size = v;
  m.epochs = 3;
  m.batch_utterances = 4;
  m.seed = 5;
  return m;
}

std::vector<int> AllUtterances(const Corpus& corpus) {
  std::vector<int> all(corpus.utterances.size());
  std::iota(all.begin(), all.end(), 0);
  return all;
}

TEST(DecimateTest, CeilLengthAndOffsetZero) {
  Matrix frames(200, 2);
  for (int t = 0; t < 200; ++t) frames.row(t) << t, -t;
  const Matrix d = Decimate(frames, 3);
  ASSERT_EQ(d.rows(), 67);
  EXPECT_EQ(d(66, 0), 198.0);
  EXPECT_EQ(Decimate(frames, 1), frames);
  std::vector<int> labels(200);
  std::iota(labels.begin(), labels.end(), 0);
  EXPECT_EQ(DecimateLabels(labels, 3).size(), 67u);
  EXPECT_EQ(DecimateLabels(labels, 3)[1], 3);
}

TEST(ModelTest, ForwardShapesAndCodebookMembership) {
  const Corpus corpus = GenerateCorpus(TinyCorpus());
  BottleneckModel model(TinyModel(), 8, 6);
  const BottleneckModel::Output out = model.Forward(corpus.utterances[0].frames);
  EXPECT_EQ(out.logits.rows(), 20);
  EXPECT_EQ(out.logits.cols(), 6);
  EXPECT_EQ(out.h.cols(), 16);
  ASSERT_EQ(out.indices.size(), 20u);
  EXPECT_TRUE(out.logits.allFinite());
  for (Eigen::Index j = 0; j < out.q.rows(); ++j) {
    EXPECT_EQ(out.q.row(j), model.codebook().prototypes.row(out.indices[static_cast<size_t>(j)]));
  }
  EXPECT_EQ(ExtractFeatures(model, corpus.utterances[0].frames, FeatureTap::kPreVq), out.h);
}

TEST(ModelTest, IdentityBottleneckPassesH) {
  const Corpus corpus = GenerateCorpus(TinyCorpus());
  BottleneckModel model(TinyModel(std::nullopt), 8, 6);
  const BottleneckModel::Output out = model.Forward(corpus.utterances[0].frames);
  EXPECT_EQ(out.q, out.h);
  EXPECT_TRUE(out.indices.empty());
}

TEST(ModelTest, RejectsWrongInputDim) {
  BottleneckModel model(TinyModel(), 8, 6);
  EXPECT_THROW(model.Forward(Matrix::Zero(10, 7)), ShapeError);
}

TEST(ModelConfigTest, ValidationAndRoundTrip) {
  ModelConfig m = TinyModel();
  m.encoder_depth = 9;
  EXPECT_THROW(m.Validate(), ConfigError);
  m = TinyModel();
  m.subsample_stride = 2;
  EXPECT_THROW(m.Validate(), ConfigError);
  m = TinyModel();
  m.codebook_update = CodebookUpdate::kGradient;
  KeyValueConfig cfg;
  ModelConfigToKeyValues(m, cfg);
  EXPECT_EQ(ModelConfigFromKeyValues(cfg), m);
  m.codebook_size.reset();
  ModelConfigToKeyValues(m, cfg);
  EXPECT_EQ(ModelConfigFromKeyValues(cfg), m);
}

TEST(TrainTest, DeterministicHistories) {
  const Corpus corpus = GenerateCorpus(TinyCorpus());
  const std::vector<int> all = AllUtterances(corpus);
  BottleneckModel a(TinyModel(), 8, 6);
  BottleneckModel b(TinyModel(), 8, 6);
  const auto ha = Train(a, corpus, all);
  const auto hb = Train(b, corpus, all);
  ASSERT_EQ(ha.size(), hb.size());
  for (size_t i = 0; i < ha.size(); ++i) {
    EXPECT_EQ(ha[i].loss.total, hb[i].loss.total);
    EXPECT_EQ(ha[i].perplexity, hb[i].perplexity);
  }
  EXPECT_TRUE(a == b);
}

TEST(TrainTest, HistoryIsConsistent) {
  const Corpus corpus = GenerateCorpus(TinyCorpus());
  BottleneckModel model(TinyModel(), 8, 6);
  const auto history = Train(model, corpus, AllUtterances(corpus));
  EXPECT_EQ(history.size(), 30u);  // 40 utterances / 4 per batch * 3 epochs
  for (const StepRecord& r : history) {
    EXPECT_EQ(r.loss.total, r.loss.task_loss + r.loss.l_vq + 0.25 * r.loss.l_vq_reg);
    EXPECT_EQ(r.loss.l_vq, r.loss.l_vq_reg);
    EXPECT_GE(r.perplexity, 1.0);
    EXPECT_LE(r.perplexity, 16.0);
  }
}

TEST(TrainTest, NoiseFreeSingleSpeakerIsLearnedPerfectly) {
  CorpusConfig c;
  c.num_speakers = 2;
  c.noise_sigma = 0.0;
  const Corpus full = GenerateCorpus(c);
  std::vector<int> one_speaker;
  for (size_t i = 0; i < full.utterances.size(); ++i) {
    if (full.utterances[i].speaker == 0) one_speaker.push_back(static_cast<int>(i));
  }
  ModelConfig m;
  m.codebook_size = c.num_content_classes;
  BottleneckModel model(m, c.frame_dim, c.num_content_classes);
  Train(model, full, one_speaker);
  EXPECT_LT(ContentErrorRate(model, full, one_speaker), 0.01);
}

// Needs the default scale: commitment rises while the encoder output grows
// and only falls once the codebook catches up, after a few hundred steps.
TEST(TrainTest, CommitmentLossTrendsDown) {
  const Corpus corpus = GenerateCorpus(CorpusConfig{});
  const CorpusSplit split = SplitCorpus(corpus, 0.8, 1);
  BottleneckModel model(ModelConfig{}, corpus.config.frame_dim,
                        corpus.config.num_content_classes);
  const auto history = Train(model, corpus, split.train);
  const size_t tenth = history.size() / 10;
  ASSERT_GT(tenth, 0u);
  double first = 0.0, last = 0.0;
  for (size_t i = 0; i < tenth; ++i) {
    first += history[i].loss.l_vq_reg;
    last += history[history.size() - 1 - i].loss.l_vq_reg;
  }
  EXPECT_LT(last, first);
}

TEST(TrainTest, GradientCodebookModeRuns) {
  const Corpus corpus = GenerateCorpus(TinyCorpus());
  ModelConfig m = TinyModel();
  m.codebook_update = CodebookUpdate::kGradient;
  BottleneckModel model(m, 8, 6);
  const auto history = Train(model, corpus, AllUtterances(corpus));
  EXPECT_FALSE(history.empty());
  EXPECT_TRUE(model.codebook().prototypes.allFinite());
}

TEST(TrainTest, DivergenceIsReported) {
  const Corpus corpus = GenerateCorpus(TinyCorpus());
  ModelConfig m = TinyModel();
  m.learning_rate = 1e300;
  BottleneckModel model(m, 8, 6);
  try {
    Train(model, corpus, AllUtterances(corpus));
    FAIL() << "expected divergence";
  } catch (const TrainingDivergedError& e) {
    EXPECT_GT(e.step(), 0);
    EXPECT_TRUE(e.last_finite().has_value());
  }
}

TEST(ContentErrorTest, UntrainedModelIsNearChance) {
  CorpusConfig c;
  c.num_speakers = 5;
  c.utterances_per_speaker = 10;
  const Corpus corpus = GenerateCorpus(c);
  double sum = 0.0;
  for (uint64_t seed = 1; seed <= 5; ++seed) {
    ModelConfig m;
    m.seed = seed;
    m.codebook_size.reset();
    BottleneckModel model(m, c.frame_dim, c.num_content_classes);
    sum += ContentErrorRate(model, corpus, AllUtterances(corpus));
  }
  EXPECT_GT(sum / 5.0, 0.9);
}

TEST(ContentErrorTest, CountsFrames) {
  const Corpus corpus = GenerateCorpus(TinyCorpus());
  BottleneckModel model(TinyModel(), 8, 6);
  const std::vector<int> utts = {0, 1, 2};
  const ContentCounts counts = CountContentErrors(model, corpus, utts);
  EXPECT_EQ(counts.frames, 60);
  EXPECT_GE(counts.rate(), 0.0);
  EXPECT_LE(counts.rate(), 1.0);
}

TEST(FeatureTest, PostVqFeaturesUseAtMostVRows) {
  const Corpus corpus = GenerateCorpus(TinyCorpus());
  BottleneckModel model(TinyModel(), 8, 6);
  Train(model, corpus, AllUtterances(corpus));
  std::set<std::vector<double>> distinct;
  for (const FrameSequence& u : corpus.utterances) {
    const Matrix q = ExtractFeatures(model, u.frames, FeatureTap::kPostVq);
    for (Eigen::Index j = 0; j < q.rows(); ++j) {
      distinct.insert(std::vector<double>(q.row(j).data(), q.row(j).data() + q.cols()));
    }
  }
  EXPECT_LE(distinct.size(), 16u);
}

TEST(CheckpointTest, RoundTripIsExact) {
  const Corpus corpus = GenerateCorpus(TinyCorpus());
  for (std::optional<int> v : {std::optional<int>(16), std::optional<int>()}) {
    BottleneckModel model(TinyModel(v), 8, 6);
    Train(model, corpus, AllUtterances(corpus));
    std::stringstream buf;
    WriteCheckpoint(buf, model);
    EXPECT_EQ(buf.str().substr(0, 4), "VQAM");
    const BottleneckModel back = ReadCheckpoint(buf);
    EXPECT_TRUE(back == model);
  }
}

TEST(CheckpointTest, TruncatedFileRejected) {
  BottleneckModel model(TinyModel(), 8, 6);
  std::stringstream buf;
  WriteCheckpoint(buf, model);
  std::stringstream cut(buf.str().substr(0, buf.str().size() / 2));
  EXPECT_THROW(ReadCheckpoint(cut), FormatError);
}

TEST(LossHistoryTest, OneRowPerStep) {
  std::vector<StepRecord> history(3);
  std::ostringstream out;
  WriteLossHistoryCsv(out, history);
  const std::string text = out.str();
  EXPECT_EQ(text.rfind("step,task,l_vq,l_vq_reg,total,perplexity\n", 0), 0u);
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 4);
}

}  // namespace
}  // namespace vqlab
