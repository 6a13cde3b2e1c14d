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

#include "vqlab/corpus.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include "vqlab/binary_io.h"

namespace vqlab {
namespace {

namespace fs = std::filesystem;

constexpr uint32_t kPrototypeStream = 0x70726f74;
constexpr uint32_t kSpeakerStream = 0x73706b72;
constexpr uint32_t kUtteranceStream = 0x75747472;
constexpr char kHeaderFile[] = "corpus.hdr";
constexpr char kHeaderMagic[] = "vqlab-corpus-v1";

// Per-dimension speaker offset std and log-scale half-width.
constexpr double kOffsetSigma = 0.3;
constexpr double kLogScaleSpread = 0.5;

std::mt19937_64 StreamRng(uint64_t seed, uint32_t stream, uint64_t index = 0) {
  std::seed_seq seq{static_cast<uint32_t>(seed), static_cast<uint32_t>(seed >> 32),
                    stream, static_cast<uint32_t>(index),
                    static_cast<uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

Matrix DrawContentPrototypes(const CorpusConfig& config) {
  std::mt19937_64 rng = StreamRng(config.seed, kPrototypeStream);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix protos(config.num_content_classes, config.frame_dim);
  int accepted = 0;
  int draws = 0;
  while (accepted < config.num_content_classes) {
    if (++draws > kMaxPrototypeDraws) {
      throw ConfigError("content prototypes: no separated set after " +
                        std::to_string(kMaxPrototypeDraws) +
                        " draws; lower num_content_classes or raise frame_dim");
    }
    Vector candidate(config.frame_dim);
    for (auto& x : candidate) x = normal(rng);
    candidate.normalize();
    bool separated = true;
    for (int k = 0; k < accepted && separated; ++k) {
      separated = (protos.row(k).transpose() - candidate).norm() >=
                  kMinPrototypeDistance;
    }
    if (separated) protos.row(accepted++) = candidate.transpose();
  }
  return protos;
}

std::vector<SpeakerProfile> DrawSpeakers(const CorpusConfig& config) {
  std::mt19937_64 rng = StreamRng(config.seed, kSpeakerStream);
  std::normal_distribution<double> offset(0.0, kOffsetSigma);
  std::uniform_real_distribution<double> log_scale(-kLogScaleSpread,
                                                   kLogScaleSpread);
  std::uniform_real_distribution<double> f0_mean(80.0, 300.0);
  std::uniform_real_distribution<double> f0_std(5.0, 40.0);
  std::vector<SpeakerProfile> speakers(static_cast<size_t>(config.num_speakers));
  for (int s = 0; s < config.num_speakers; ++s) {
    SpeakerProfile& p = speakers[static_cast<size_t>(s)];
    p.id = s;
    p.offset.resize(config.frame_dim);
    p.scale.resize(config.frame_dim);
    for (int f = 0; f < config.frame_dim; ++f) {
      p.offset(f) = offset(rng);
      p.scale(f) = std::clamp(std::exp(log_scale(rng)), 0.5, 2.0);
    }
    p.f0_mean = f0_mean(rng);
    p.f0_std = f0_std(rng);
  }
  return speakers;
}

void WriteRow(std::ostream& out, const auto& row) {
  for (Eigen::Index k = 0; k < row.size(); ++k) {
    if (k) out << ' ';
    out << row(k);
  }
}

Vector ReadVector(std::istream& in, Eigen::Index n, const std::string& what) {
  Vector v(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    if (!(in >> v(k))) throw FormatError("corpus: truncated " + what);
  }
  return v;
}

void Expect(std::istream& in, const std::string& token) {
  std::string got;
  if (!(in >> got) || got != token) {
    throw FormatError("corpus: expected '" + token + "', got '" + got + "'");
  }
}

template <typename T>
T ReadField(std::istream& in, const std::string& name) {
  Expect(in, name);
  T v;
  if (!(in >> v)) throw FormatError("corpus: bad value for " + name);
  return v;
}

}  // namespace

void CorpusConfig::Validate() const {
  auto require = [](bool ok, const std::string& msg) {
    if (!ok) throw ConfigError("corpus config: " + msg);
  };
  require(num_speakers >= 2, "num_speakers must be >= 2");
  require(num_content_classes >= 2, "num_content_classes must be >= 2");
  require(frame_dim >= 2, "frame_dim must be >= 2");
  require(utterances_per_speaker >= 2, "utterances_per_speaker must be >= 2");
  require(frames_per_utterance >= 10, "frames_per_utterance must be >= 10");
  require(std::isfinite(noise_sigma) && noise_sigma >= 0.0,
          "noise_sigma must be >= 0");
}

CorpusConfig CorpusConfigFromKeyValues(const KeyValueConfig& cfg,
                                       const std::string& section) {
  CorpusConfig c;
  c.num_speakers = static_cast<int>(cfg.GetInt(section, "num_speakers", c.num_speakers));
  c.num_content_classes = static_cast<int>(
      cfg.GetInt(section, "num_content_classes", c.num_content_classes));
  c.frame_dim = static_cast<int>(cfg.GetInt(section, "frame_dim", c.frame_dim));
  c.utterances_per_speaker = static_cast<int>(
      cfg.GetInt(section, "utterances_per_speaker", c.utterances_per_speaker));
  c.frames_per_utterance = static_cast<int>(
      cfg.GetInt(section, "frames_per_utterance", c.frames_per_utterance));
  c.noise_sigma = cfg.GetDouble(section, "noise_sigma", c.noise_sigma);
  c.seed = cfg.GetUint(section, "seed", c.seed);
  c.Validate();
  return c;
}

void CorpusConfigToKeyValues(const CorpusConfig& c, KeyValueConfig& cfg,
                             const std::string& section) {
  cfg.Set(section, "num_speakers", std::to_string(c.num_speakers));
  cfg.Set(section, "num_content_classes", std::to_string(c.num_content_classes));
  cfg.Set(section, "frame_dim", std::to_string(c.frame_dim));
  cfg.Set(section, "utterances_per_speaker",
          std::to_string(c.utterances_per_speaker));
  cfg.Set(section, "frames_per_utterance", std::to_string(c.frames_per_utterance));
  cfg.Set(section, "noise_sigma", FormatDouble(c.noise_sigma));
  cfg.Set(section, "seed", std::to_string(c.seed));
}

FrameSequence GenerateUtterance(const CorpusConfig& config,
                                const Matrix& content_prototypes,
                                const SpeakerProfile& speaker,
                                int utterance_id) {
  std::mt19937_64 rng = StreamRng(config.seed, kUtteranceStream,
                                  static_cast<uint64_t>(utterance_id));
  const int t_len = config.frames_per_utterance;
  const int c = config.num_content_classes;
  FrameSequence seq;
  seq.speaker = speaker.id;
  seq.utterance_id = utterance_id;
  seq.content_labels.reserve(static_cast<size_t>(t_len));

  std::uniform_int_distribution<int> pick_class(0, c - 1);
  int previous = -1;
  int t = 0;
  while (t < t_len) {
    const int remaining = t_len - t;
    int run = remaining;
    if (remaining > kMaxRun) {
      // Leave at least kMinRun frames for the next segment.
      std::uniform_int_distribution<int> pick_run(
          kMinRun, std::min(kMaxRun, remaining - kMinRun));
      run = pick_run(rng);
    }
    int label = pick_class(rng);
    while (label == previous) label = pick_class(rng);
    previous = label;
    for (int k = 0; k < run; ++k) seq.content_labels.push_back(label);
    t += run;
  }

  std::normal_distribution<double> noise(0.0, 1.0);
  seq.frames.resize(t_len, config.frame_dim);
  for (int i = 0; i < t_len; ++i) {
    const int label = seq.content_labels[static_cast<size_t>(i)];
    for (int f = 0; f < config.frame_dim; ++f) {
      double x = speaker.scale(f) * content_prototypes(label, f) +
                 speaker.offset(f);
      if (config.noise_sigma > 0.0) x += config.noise_sigma * noise(rng);
      seq.frames(i, f) = x;
    }
  }
  return seq;
}

Corpus GenerateCorpus(const CorpusConfig& config) {
  config.Validate();
  Corpus corpus;
  corpus.config = config;
  corpus.content_prototypes = DrawContentPrototypes(config);
  corpus.speakers = DrawSpeakers(config);
  corpus.utterances.reserve(static_cast<size_t>(config.num_speakers) *
                            static_cast<size_t>(config.utterances_per_speaker));
  for (int s = 0; s < config.num_speakers; ++s) {
    for (int k = 0; k < config.utterances_per_speaker; ++k) {
      corpus.utterances.push_back(GenerateUtterance(
          config, corpus.content_prototypes, corpus.speakers[static_cast<size_t>(s)],
          s * config.utterances_per_speaker + k));
    }
  }
  return corpus;
}

F0Track GenerateF0Track(const SpeakerProfile& speaker, int length,
                        std::mt19937_64& rng) {
  if (length < 20) {
    throw std::invalid_argument("GenerateF0Track: length must be >= 20");
  }
  F0Track track;
  track.values.assign(static_cast<size_t>(length), 0.0);
  track.voiced.assign(static_cast<size_t>(length), false);

  std::uniform_int_distribution<int> voiced_run(10, 40);
  std::uniform_int_distribution<int> unvoiced_run(2, 10);
  bool voiced = true;
  for (int t = 0; t < length;) {
    const int run = voiced ? voiced_run(rng) : unvoiced_run(rng);
    for (int k = 0; k < run && t < length; ++k, ++t) {
      track.voiced[static_cast<size_t>(t)] = voiced;
    }
    voiced = !voiced;
  }

  const double step = speaker.f0_std / 10.0;
  const double bound = 3.0 * speaker.f0_std;
  std::normal_distribution<double> increment(0.0, 1.0);
  std::vector<double> deviation;
  double d = 0.0;
  for (int t = 0; t < length; ++t) {
    if (!track.voiced[static_cast<size_t>(t)]) continue;
    if (step > 0.0) {
      d += step * increment(rng);
      while (d > bound || d < -bound) d = d > bound ? 2 * bound - d : -2 * bound - d;
    }
    deviation.push_back(d);
  }
  double mean = 0.0;
  for (double x : deviation) mean += x;
  mean /= static_cast<double>(deviation.size());

  size_t k = 0;
  for (int t = 0; t < length; ++t) {
    if (!track.voiced[static_cast<size_t>(t)]) continue;
    const double centred = step > 0.0 ? deviation[k] - mean : 0.0;
    track.values[static_cast<size_t>(t)] =
        std::clamp(speaker.f0_mean + centred, 50.0, 500.0);
    ++k;
  }
  return track;
}

CorpusSplit SplitCorpus(const Corpus& corpus, double train_fraction,
                        uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw ConfigError("split: train_fraction must lie in (0, 1)");
  }
  std::vector<std::vector<int>> by_speaker(corpus.speakers.size());
  for (size_t i = 0; i < corpus.utterances.size(); ++i) {
    by_speaker.at(static_cast<size_t>(corpus.utterances[i].speaker))
        .push_back(static_cast<int>(i));
  }
  std::mt19937_64 rng(seed);
  CorpusSplit split;
  for (size_t s = 0; s < by_speaker.size(); ++s) {
    auto& utts = by_speaker[s];
    const int n = static_cast<int>(utts.size());
    const int n_train = static_cast<int>(std::lround(train_fraction * n));
    if (n_train < 1 || n_train > n - 1) {
      throw ConfigError("split: speaker " + std::to_string(s) + " has " +
                        std::to_string(n) +
                        " utterances, cannot place it in both partitions");
    }
    std::shuffle(utts.begin(), utts.end(), rng);
    split.train.insert(split.train.end(), utts.begin(), utts.begin() + n_train);
    split.eval.insert(split.eval.end(), utts.begin() + n_train, utts.end());
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.eval.begin(), split.eval.end());

  auto classes_in = [&](const std::vector<int>& part) {
    std::set<int> seen;
    for (int i : part) {
      const auto& labels = corpus.utterances[static_cast<size_t>(i)].content_labels;
      seen.insert(labels.begin(), labels.end());
    }
    return seen.size();
  };
  const size_t c = static_cast<size_t>(corpus.config.num_content_classes);
  if (classes_in(split.train) != c || classes_in(split.eval) != c) {
    throw ConfigError("split: some content class is missing from a partition");
  }
  return split;
}

std::string UtteranceFileName(int utterance_id) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "utt_%06d.txt", utterance_id);
  return buf;
}

void WriteMatrixText(std::ostream& out, const Matrix& m) {
  out << std::setprecision(17);
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    WriteRow(out, m.row(r));
    out << '\n';
  }
}

Matrix ReadMatrixText(std::istream& in, Eigen::Index rows, Eigen::Index cols) {
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      if (!(in >> m(r, c))) throw FormatError("truncated matrix text");
    }
  }
  return m;
}

void SaveCorpus(const Corpus& corpus, const std::string& dir) {
  fs::create_directories(dir);
  const CorpusConfig& c = corpus.config;
  {
    std::ofstream out(fs::path(dir) / kHeaderFile);
    if (!out) throw std::runtime_error("cannot write corpus header in " + dir);
    out << std::setprecision(17);
    out << kHeaderMagic << '\n'
        << "num_speakers " << c.num_speakers << '\n'
        << "num_content_classes " << c.num_content_classes << '\n'
        << "frame_dim " << c.frame_dim << '\n'
        << "utterances_per_speaker " << c.utterances_per_speaker << '\n'
        << "frames_per_utterance " << c.frames_per_utterance << '\n'
        << "noise_sigma " << c.noise_sigma << '\n'
        << "seed " << c.seed << '\n'
        << "content_prototypes " << corpus.content_prototypes.rows() << ' '
        << corpus.content_prototypes.cols() << '\n';
    WriteMatrixText(out, corpus.content_prototypes);
    out << "speakers " << corpus.speakers.size() << '\n';
    for (const SpeakerProfile& s : corpus.speakers) {
      out << "speaker " << s.id << ' ' << s.f0_mean << ' ' << s.f0_std << '\n'
          << "offset ";
      WriteRow(out, s.offset);
      out << "\nscale ";
      WriteRow(out, s.scale);
      out << '\n';
    }
    if (!out) throw std::runtime_error("failed writing corpus header in " + dir);
  }
  for (const FrameSequence& u : corpus.utterances) {
    std::ofstream out(fs::path(dir) / UtteranceFileName(u.utterance_id));
    if (!out) throw std::runtime_error("cannot write utterance in " + dir);
    out << std::setprecision(17);
    out << "utterance " << u.utterance_id << " speaker " << u.speaker
        << " frames " << u.frames.rows() << " dim " << u.frames.cols() << '\n';
    for (Eigen::Index t = 0; t < u.frames.rows(); ++t) {
      out << u.content_labels[static_cast<size_t>(t)] << ' ';
      WriteRow(out, u.frames.row(t));
      out << '\n';
    }
    if (!out) throw std::runtime_error("failed writing utterance in " + dir);
  }
}

Corpus LoadCorpus(const std::string& dir) {
  std::ifstream in(fs::path(dir) / kHeaderFile);
  if (!in) throw FormatError("no corpus header in " + dir);
  std::string magic;
  in >> magic;
  if (magic != kHeaderMagic) throw FormatError("bad corpus header magic");
  Corpus corpus;
  CorpusConfig& c = corpus.config;
  c.num_speakers = ReadField<int>(in, "num_speakers");
  c.num_content_classes = ReadField<int>(in, "num_content_classes");
  c.frame_dim = ReadField<int>(in, "frame_dim");
  c.utterances_per_speaker = ReadField<int>(in, "utterances_per_speaker");
  c.frames_per_utterance = ReadField<int>(in, "frames_per_utterance");
  c.noise_sigma = ReadField<double>(in, "noise_sigma");
  c.seed = ReadField<uint64_t>(in, "seed");
  try {
    c.Validate();
  } catch (const ConfigError& e) {
    throw FormatError(e.what());
  }
  const auto rows = ReadField<Eigen::Index>(in, "content_prototypes");
  Eigen::Index cols;
  in >> cols;
  if (rows != c.num_content_classes || cols != c.frame_dim) {
    throw FormatError("corpus: prototype shape disagrees with config");
  }
  corpus.content_prototypes = ReadMatrixText(in, rows, cols);
  const auto n_speakers = ReadField<size_t>(in, "speakers");
  if (n_speakers != static_cast<size_t>(c.num_speakers)) {
    throw FormatError("corpus: speaker count disagrees with config");
  }
  for (size_t s = 0; s < n_speakers; ++s) {
    SpeakerProfile p;
    p.id = ReadField<int>(in, "speaker");
    in >> p.f0_mean >> p.f0_std;
    Expect(in, "offset");
    p.offset = ReadVector(in, c.frame_dim, "offset");
    Expect(in, "scale");
    p.scale = ReadVector(in, c.frame_dim, "scale");
    corpus.speakers.push_back(std::move(p));
  }

  const int total = c.num_speakers * c.utterances_per_speaker;
  for (int id = 0; id < total; ++id) {
    std::ifstream u(fs::path(dir) / UtteranceFileName(id));
    if (!u) throw FormatError("corpus: missing " + UtteranceFileName(id));
    FrameSequence seq;
    seq.utterance_id = ReadField<int>(u, "utterance");
    seq.speaker = ReadField<int>(u, "speaker");
    const auto t_len = ReadField<Eigen::Index>(u, "frames");
    const auto dim = ReadField<Eigen::Index>(u, "dim");
    if (seq.utterance_id != id || dim != c.frame_dim || t_len < 1 ||
        seq.speaker < 0 || seq.speaker >= c.num_speakers) {
      throw FormatError("corpus: inconsistent header in " + UtteranceFileName(id));
    }
    seq.frames.resize(t_len, dim);
    seq.content_labels.resize(static_cast<size_t>(t_len));
    for (Eigen::Index t = 0; t < t_len; ++t) {
      int label;
      if (!(u >> label) || label < 0 || label >= c.num_content_classes) {
        throw FormatError("corpus: bad label in " + UtteranceFileName(id));
      }
      seq.content_labels[static_cast<size_t>(t)] = label;
      for (Eigen::Index f = 0; f < dim; ++f) {
        if (!(u >> seq.frames(t, f))) {
          throw FormatError("corpus: truncated " + UtteranceFileName(id));
        }
      }
    }
    corpus.utterances.push_back(std::move(seq));
  }
  return corpus;
}

}  // namespace vqlab
