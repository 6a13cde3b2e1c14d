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

// Privacy metrics over verification scores (EER, linkability D_sys) and the
// per-condition report they feed.

#ifndef VQLAB_METRICS_H_
#define VQLAB_METRICS_H_

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vqlab/config.h"

namespace vqlab {

struct ScoreSet {
  std::vector<double> mated;     // same-speaker trials
  std::vector<double> nonmated;  // different-speaker trials
};

struct EerResult {
  double eer = 0.0;
  double threshold = 0.0;
};

// Sweeps the sorted unique scores with FAR(t) = P(nonmated >= t) and
// FRR(t) = P(mated < t), and interpolates linearly between the two
// operating points where FAR - FRR changes sign.
EerResult ComputeEer(const ScoreSet& scores);

inline constexpr int kDefaultLinkabilityBins = 100;
inline constexpr double kLinkabilitySmoothing = 1e-12;

struct LinkabilityResult {
  double d_sys = 0.0;
  std::vector<double> local;      // D(s) per bin
  std::vector<double> bin_edges;  // num_bins + 1
};

// Histogram estimate of D_sys with equal priors:
// D(s) = max(0, 2 LR(s) / (1 + LR(s)) - 1), d_sys = sum_s D(s) p(s|mated).
LinkabilityResult ComputeLinkability(const ScoreSet& scores,
                                     int num_bins = kDefaultLinkabilityBins);

// Score files hold one score per line.
void WriteScores(std::ostream& out, std::span<const double> scores);
std::vector<double> ReadScores(std::istream& in);
void SaveScores(const std::string& path, std::span<const double> scores);
std::vector<double> LoadScores(const std::string& path);

// One row of the results table.
struct MetricsReport {
  std::string condition;
  std::optional<int> codebook_size;  // nullopt: no quantization
  double content_error_rate = 0.0;
  double speaker_probe_accuracy = 0.0;
  double eer = 0.0;
  double d_sys = 0.0;
  KeyValueConfig config;
  uint64_t seed = 0;

  bool operator==(const MetricsReport&) const = default;
};

// Validates ranges (fractions and d_sys in [0, 1], finite) and returns the
// record. Throws std::out_of_range on violation.
MetricsReport AssembleReport(std::string condition,
                             std::optional<int> codebook_size,
                             double content_error_rate,
                             double speaker_probe_accuracy, double eer,
                             double d_sys, KeyValueConfig config,
                             uint64_t seed);

// Structured text: a [report] section followed by the config echo, whose
// sections are prefixed with "config.".
std::string SerializeReport(const MetricsReport& report);
MetricsReport ParseReport(const std::string& text);

inline constexpr char kReportCsvHeader[] =
    "condition,V,content_err,probe_acc,eer,d_sys,seed";
std::string ReportCsvRow(const MetricsReport& report);
void WriteReportsCsv(std::ostream& out, std::span<const MetricsReport> reports);

}  // namespace vqlab

#endif  // VQLAB_METRICS_H_
