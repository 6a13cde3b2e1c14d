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

// Synthetic factorized corpus: every frame mixes a content class
// (pseudo-phoneme) with a speaker transform, so probes can measure how much
// of each factor a representation keeps.

#ifndef VQLAB_CORPUS_H_
#define VQLAB_CORPUS_H_

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "vqlab/autodiff.h"
#include "vqlab/config.h"
#include "vqlab/f0.h"

namespace vqlab {

struct CorpusConfig {
  int num_speakers = 50;
  int num_content_classes = 40;
  int frame_dim = 24;
  int utterances_per_speaker = 40;
  int frames_per_utterance = 200;
  double noise_sigma = 0.1;
  uint64_t seed = 1;

  void Validate() const;  // throws ConfigError
  bool operator==(const CorpusConfig&) const = default;
};

CorpusConfig CorpusConfigFromKeyValues(const KeyValueConfig& cfg,
                                       const std::string& section = "corpus");
void CorpusConfigToKeyValues(const CorpusConfig& config, KeyValueConfig& cfg,
                             const std::string& section = "corpus");

struct SpeakerProfile {
  int id = 0;
  Vector offset;  // F
  Vector scale;   // F, entries in [0.5, 2]
  double f0_mean = 0.0;
  double f0_std = 0.0;
};

struct FrameSequence {
  Matrix frames;                    // T x F
  std::vector<int> content_labels;  // T
  int speaker = 0;
  int utterance_id = 0;

  int length() const { return static_cast<int>(frames.rows()); }
};

struct Corpus {
  CorpusConfig config;
  Matrix content_prototypes;  // C x F, unit-norm rows
  std::vector<SpeakerProfile> speakers;
  std::vector<FrameSequence> utterances;  // ordered by utterance_id
};

// Segment run-lengths are drawn from [kMinRun, kMaxRun].
inline constexpr int kMinRun = 3;
inline constexpr int kMaxRun = 8;
inline constexpr double kMinPrototypeDistance = 0.5;
inline constexpr int kMaxPrototypeDraws = 10000;

// frame = scale_s .* mu_c + offset_s + N(0, noise_sigma^2 I). Pure function
// of the config; each utterance has its own RNG stream keyed by
// (seed, utterance_id).
Corpus GenerateCorpus(const CorpusConfig& config);

// Regenerates one utterance exactly as GenerateCorpus would.
FrameSequence GenerateUtterance(const CorpusConfig& config,
                                const Matrix& content_prototypes,
                                const SpeakerProfile& speaker,
                                int utterance_id);

// Mean-reverting pitch walk around the speaker's f0_mean: increments have
// std f0_std/10, the walk is reflected into +-3 f0_std, re-centred so the
// voiced mean is f0_mean, then clipped to [50, 500] Hz. Voiced runs last
// 10-40 frames, unvoiced runs 2-10.
F0Track GenerateF0Track(const SpeakerProfile& speaker, int length,
                        std::mt19937_64& rng);

struct CorpusSplit {
  std::vector<int> train;  // indices into Corpus::utterances
  std::vector<int> eval;
};

// Per-speaker stratified split by utterance. Throws ConfigError when some
// speaker or content class would be missing from a partition.
CorpusSplit SplitCorpus(const Corpus& corpus, double train_fraction,
                        uint64_t seed);

// Directory layout: corpus.hdr (config echo, content prototypes, speaker
// profiles) and utt_NNNNNN.txt per utterance, numbers at 17 significant
// digits.
void SaveCorpus(const Corpus& corpus, const std::string& dir);
Corpus LoadCorpus(const std::string& dir);

std::string UtteranceFileName(int utterance_id);
void WriteMatrixText(std::ostream& out, const Matrix& m);
Matrix ReadMatrixText(std::istream& in, Eigen::Index rows, Eigen::Index cols);

}  // namespace vqlab

#endif  // VQLAB_CORPUS_H_
