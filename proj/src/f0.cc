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
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "vqlab/binary_io.h"

namespace vqlab {
namespace {

constexpr double kNoiseFloorHz = 1.0;

double SignalPower(const F0Track& track, SnrReference reference) {
  const F0Stats s = ComputeF0Stats(track);
  if (reference == SnrReference::kVariance) return s.std * s.std;
  return s.std * s.std + s.mean * s.mean;
}

}  // namespace

size_t F0Track::voiced_count() const {
  size_t n = 0;
  for (bool v : voiced) n += v ? 1 : 0;
  return n;
}

void F0Track::Validate() const {
  if (values.size() != voiced.size()) {
    throw std::invalid_argument("F0Track: values/voiced length mismatch");
  }
  for (size_t t = 0; t < values.size(); ++t) {
    if ((values[t] == 0.0) == voiced[t] || !std::isfinite(values[t])) {
      throw std::invalid_argument("F0Track: frame " + std::to_string(t) +
                                  " violates value==0 <=> unvoiced");
    }
  }
}

F0Stats ComputeF0Stats(const F0Track& track) {
  F0Stats s;
  double sum = 0.0;
  for (size_t t = 0; t < track.size(); ++t) {
    if (!track.voiced[t]) continue;
    sum += track.values[t];
    ++s.voiced_count;
  }
  if (s.voiced_count < 2) {
    throw DegenerateF0Error("F0 statistics need at least 2 voiced frames");
  }
  s.mean = sum / static_cast<double>(s.voiced_count);
  double ss = 0.0;
  for (size_t t = 0; t < track.size(); ++t) {
    if (!track.voiced[t]) continue;
    const double d = track.values[t] - s.mean;
    ss += d * d;
  }
  s.std = std::sqrt(ss / static_cast<double>(s.voiced_count));
  return s;
}

F0Track LinearShift(const F0Track& track, const F0Stats& src,
                    const F0Stats& tgt) {
  if (!(src.std > 0.0)) {
    throw DegenerateF0Error("linear shift: source std must be positive");
  }
  F0Track out = track;
  for (size_t t = 0; t < out.size(); ++t) {
    if (!out.voiced[t]) continue;
    out.values[t] = (track.values[t] - src.mean) / src.std * tgt.std + tgt.mean;
  }
  return out;
}

double NoiseStdForSnr(double signal_power, double snr_db) {
  if (std::isinf(snr_db) && snr_db > 0) return 0.0;
  return std::sqrt(signal_power / std::pow(10.0, snr_db / 10.0));
}

F0Track AddAwgn(const F0Track& track, double snr_db, std::mt19937_64& rng,
                SnrReference reference) {
  const double power = SignalPower(track, reference);
  if (!(power > 0.0)) {
    throw DegenerateF0Error("AWGN: signal power is zero");
  }
  const double sigma = NoiseStdForSnr(power, snr_db);
  F0Track out = track;
  if (sigma == 0.0) return out;
  std::normal_distribution<double> noise(0.0, sigma);
  for (size_t t = 0; t < out.size(); ++t) {
    if (!out.voiced[t]) continue;
    out.values[t] = std::max(kNoiseFloorHz, track.values[t] + noise(rng));
  }
  return out;
}

double MeasuredSnr(const F0Track& clean, const F0Track& noisy,
                   SnrReference reference) {
  if (clean.voiced != noisy.voiced) {
    throw std::invalid_argument("measured SNR: voiced masks differ");
  }
  const double power = SignalPower(clean, reference);
  double noise = 0.0;
  size_t n = 0;
  for (size_t t = 0; t < clean.size(); ++t) {
    if (!clean.voiced[t]) continue;
    const double d = noisy.values[t] - clean.values[t];
    noise += d * d;
    ++n;
  }
  noise /= static_cast<double>(n);
  if (!(noise > 0.0)) {
    throw DegenerateF0Error("measured SNR: zero noise energy");
  }
  return 10.0 * std::log10(power / noise);
}

void WriteF0Track(std::ostream& out, const F0Track& track) {
  out << std::setprecision(17);
  for (size_t t = 0; t < track.size(); ++t) {
    out << track.values[t] << ' ' << (track.voiced[t] ? 1 : 0) << '\n';
  }
}

F0Track ReadF0Track(std::istream& in) {
  F0Track track;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream fields(line);
    double value;
    int flag;
    std::string extra;
    if (!(fields >> value >> flag) || (fields >> extra) ||
        (flag != 0 && flag != 1)) {
      throw FormatError("F0 track line " + std::to_string(line_no) +
                        ": expected '<value_hz> <0|1>'");
    }
    track.values.push_back(value);
    track.voiced.push_back(flag == 1);
  }
  try {
    track.Validate();
  } catch (const std::invalid_argument& e) {
    throw FormatError(e.what());
  }
  return track;
}

void SaveF0Track(const std::string& path, const F0Track& track) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  WriteF0Track(out, track);
}

F0Track LoadF0Track(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path);
  return ReadF0Track(in);
}

}  // namespace vqlab
