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

#include "vqlab/metrics.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "vqlab/binary_io.h"

namespace vqlab {
namespace {

constexpr char kConfigPrefix[] = "config.";

void RequireNonEmpty(const ScoreSet& scores, const char* what) {
  if (scores.mated.empty() || scores.nonmated.empty()) {
    throw std::invalid_argument(std::string(what) +
                                ": mated and non-mated scores must be non-empty");
  }
  for (const auto* list : {&scores.mated, &scores.nonmated}) {
    for (double s : *list) {
      if (!std::isfinite(s)) {
        throw std::invalid_argument(std::string(what) + ": non-finite score");
      }
    }
  }
}

}  // namespace

EerResult ComputeEer(const ScoreSet& scores) {
  RequireNonEmpty(scores, "EER");
  std::vector<double> mated = scores.mated;
  std::vector<double> nonmated = scores.nonmated;
  std::sort(mated.begin(), mated.end());
  std::sort(nonmated.begin(), nonmated.end());
  std::vector<double> thresholds = mated;
  thresholds.insert(thresholds.end(), nonmated.begin(), nonmated.end());
  std::sort(thresholds.begin(), thresholds.end());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()),
                   thresholds.end());

  const double n_m = static_cast<double>(mated.size());
  const double n_n = static_cast<double>(nonmated.size());
  auto far = [&](double t) {
    const auto below = std::lower_bound(nonmated.begin(), nonmated.end(), t);
    return static_cast<double>(nonmated.end() - below) / n_n;
  };
  auto frr = [&](double t) {
    const auto below = std::lower_bound(mated.begin(), mated.end(), t);
    return static_cast<double>(below - mated.begin()) / n_m;
  };

  // The lowest threshold accepts everything: FAR = 1, FRR = 0.
  double prev_t = thresholds.front();
  double prev_far = far(prev_t);
  double prev_frr = frr(prev_t);
  for (size_t k = 1; k <= thresholds.size(); ++k) {
    const bool beyond = k == thresholds.size();
    const double t = beyond ? std::numeric_limits<double>::infinity()
                            : thresholds[k];
    const double cur_far = beyond ? 0.0 : far(t);
    const double cur_frr = beyond ? 1.0 : frr(t);
    const double prev_diff = prev_far - prev_frr;
    const double cur_diff = cur_far - cur_frr;
    if (prev_diff == 0.0) return {prev_far, prev_t};
    if (cur_diff <= 0.0) {
      if (cur_diff == 0.0) return {cur_far, beyond ? prev_t : t};
      const double w = prev_diff / (prev_diff - cur_diff);
      const double eer = prev_far + w * (cur_far - prev_far);
      const double threshold = beyond ? prev_t : prev_t + w * (t - prev_t);
      return {eer, threshold};
    }
    prev_t = t;
    prev_far = cur_far;
    prev_frr = cur_frr;
  }
  return {prev_far, prev_t};  // unreachable: the final point has FAR - FRR = -1
}

LinkabilityResult ComputeLinkability(const ScoreSet& scores, int num_bins) {
  RequireNonEmpty(scores, "linkability");
  if (num_bins < 2) throw std::invalid_argument("linkability: num_bins < 2");
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto* list : {&scores.mated, &scores.nonmated}) {
    for (double s : *list) {
      lo = std::min(lo, s);
      hi = std::max(hi, s);
    }
  }
  LinkabilityResult result;
  result.local.assign(static_cast<size_t>(num_bins), 0.0);
  result.bin_edges.resize(static_cast<size_t>(num_bins) + 1);
  const double width = (hi - lo) / num_bins;
  for (int b = 0; b <= num_bins; ++b) {
    result.bin_edges[static_cast<size_t>(b)] = b == num_bins ? hi : lo + b * width;
  }
  if (!(hi > lo)) return result;  // all scores identical: nothing to link

  auto histogram = [&](const std::vector<double>& list) {
    std::vector<double> p(static_cast<size_t>(num_bins), 0.0);
    for (double s : list) {
      int b = static_cast<int>(std::floor((s - lo) / width));
      b = std::clamp(b, 0, num_bins - 1);
      p[static_cast<size_t>(b)] += 1.0;
    }
    for (double& x : p) x /= static_cast<double>(list.size());
    return p;
  };
  const std::vector<double> p_mated = histogram(scores.mated);
  const std::vector<double> p_nonmated = histogram(scores.nonmated);
  double d_sys = 0.0;
  for (size_t b = 0; b < p_mated.size(); ++b) {
    const double lr = (p_mated[b] + kLinkabilitySmoothing) /
                      (p_nonmated[b] + kLinkabilitySmoothing);
    const double d = std::max(0.0, 2.0 * lr / (1.0 + lr) - 1.0);
    result.local[b] = d;
    d_sys += d * p_mated[b];
  }
  result.d_sys = std::clamp(d_sys, 0.0, 1.0);
  return result;
}

void WriteScores(std::ostream& out, std::span<const double> scores) {
  for (double s : scores) out << FormatDouble(s) << '\n';
}

std::vector<double> ReadScores(std::istream& in) {
  std::vector<double> scores;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      scores.push_back(ParseDouble(line, "score line " + std::to_string(line_no)));
    } catch (const ConfigError& e) {
      throw FormatError(e.what());
    }
  }
  return scores;
}

void SaveScores(const std::string& path, std::span<const double> scores) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  WriteScores(out, scores);
}

std::vector<double> LoadScores(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open score file " + path);
  return ReadScores(in);
}

MetricsReport AssembleReport(std::string condition,
                             std::optional<int> codebook_size,
                             double content_error_rate,
                             double speaker_probe_accuracy, double eer,
                             double d_sys, KeyValueConfig config,
                             uint64_t seed) {
  auto in_unit = [](double v, const char* name) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw std::out_of_range(std::string("report: ") + name +
                              " outside [0, 1]: " + FormatDouble(v));
    }
  };
  if (condition.empty() ||
      condition.find_first_of(",\n\r=[]") != std::string::npos) {
    throw std::out_of_range("report: condition label '" + condition +
                            "' is empty or contains reserved characters");
  }
  if (codebook_size && *codebook_size < 1) {
    throw std::out_of_range("report: codebook size must be >= 1");
  }
  in_unit(content_error_rate, "content_err");
  in_unit(speaker_probe_accuracy, "probe_acc");
  in_unit(eer, "eer");
  in_unit(d_sys, "d_sys");
  MetricsReport r;
  r.condition = std::move(condition);
  r.codebook_size = codebook_size;
  r.content_error_rate = content_error_rate;
  r.speaker_probe_accuracy = speaker_probe_accuracy;
  r.eer = eer;
  r.d_sys = d_sys;
  r.config = std::move(config);
  r.seed = seed;
  return r;
}

std::string SerializeReport(const MetricsReport& r) {
  KeyValueConfig out;
  out.Set("report", "condition", r.condition);
  out.Set("report", "V", r.codebook_size ? std::to_string(*r.codebook_size) : "none");
  out.Set("report", "content_err", FormatDouble(r.content_error_rate));
  out.Set("report", "probe_acc", FormatDouble(r.speaker_probe_accuracy));
  out.Set("report", "eer", FormatDouble(r.eer));
  out.Set("report", "d_sys", FormatDouble(r.d_sys));
  out.Set("report", "seed", std::to_string(r.seed));
  for (const std::string& name : r.config.SectionNames()) {
    for (const auto& [k, v] : r.config.GetSection(name)) {
      out.Set(kConfigPrefix + name, k, v);
    }
  }
  return out.ToString();
}

MetricsReport ParseReport(const std::string& text) {
  const KeyValueConfig in = KeyValueConfig::ParseString(text);
  auto required = [&](const std::string& key) {
    auto v = in.Find("report", key);
    if (!v) throw FormatError("report: missing field '" + key + "'");
    return *v;
  };
  std::optional<int> v;
  if (const std::string vs = required("V"); vs != "none") {
    v = static_cast<int>(ParseInt(vs, "report.V"));
  }
  KeyValueConfig config;
  const std::string prefix = kConfigPrefix;
  for (const std::string& name : in.SectionNames()) {
    if (name.rfind(prefix, 0) != 0) continue;
    const std::string inner = name.substr(prefix.size());
    for (const auto& [k, val] : in.GetSection(name)) config.Set(inner, k, val);
  }
  return AssembleReport(required("condition"), v,
                        ParseDouble(required("content_err"), "content_err"),
                        ParseDouble(required("probe_acc"), "probe_acc"),
                        ParseDouble(required("eer"), "eer"),
                        ParseDouble(required("d_sys"), "d_sys"),
                        std::move(config),
                        ParseUint(required("seed"), "seed"));
}

std::string ReportCsvRow(const MetricsReport& r) {
  std::ostringstream out;
  out << r.condition << ','
      << (r.codebook_size ? std::to_string(*r.codebook_size) : "none") << ','
      << FormatDouble(r.content_error_rate) << ','
      << FormatDouble(r.speaker_probe_accuracy) << ',' << FormatDouble(r.eer)
      << ',' << FormatDouble(r.d_sys) << ',' << r.seed;
  return out.str();
}

void WriteReportsCsv(std::ostream& out, std::span<const MetricsReport> reports) {
  out << kReportCsvHeader << '\n';
  for (const MetricsReport& r : reports) out << ReportCsvRow(r) << '\n';
}

}  // namespace vqlab
