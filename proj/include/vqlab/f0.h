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

// F0 anonymization: statistics matching by a linear shift and additive white
// Gaussian noise at a target SNR.

#ifndef VQLAB_F0_H_
#define VQLAB_F0_H_

#include <iosfwd>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace vqlab {

// Pitch contour in Hz. Unvoiced frames carry exactly 0.
struct F0Track {
  std::vector<double> values;
  std::vector<bool> voiced;
  double frame_rate = 100.0;

  size_t size() const { return values.size(); }
  size_t voiced_count() const;
  // Throws std::invalid_argument unless values[t] == 0 <=> !voiced[t].
  void Validate() const;
};

struct F0Stats {
  double mean = 0.0;
  double std = 0.0;  // population std over voiced frames
  size_t voiced_count = 0;
};

// Signal power used for the SNR: the variance of the voiced values, or their
// mean square when the mean should count as signal.
enum class SnrReference { kVariance, kMeanSquare };

// Raised for degenerate inputs (too few voiced frames, zero spread, zero
// noise energy).
class DegenerateF0Error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

F0Stats ComputeF0Stats(const F0Track& track);

// Voiced frames: f' = (f - src.mean) / src.std * tgt.std + tgt.mean.
F0Track LinearShift(const F0Track& track, const F0Stats& src,
                    const F0Stats& tgt);

// Adds N(0, P / 10^(snr_db/10)) to voiced frames and floors them at 1 Hz.
// An infinite SNR returns the input unchanged.
F0Track AddAwgn(const F0Track& track, double snr_db, std::mt19937_64& rng,
                SnrReference reference = SnrReference::kVariance);

double NoiseStdForSnr(double signal_power, double snr_db);

// 10 log10(P(clean voiced) / mean((noisy - clean)^2 over voiced)).
double MeasuredSnr(const F0Track& clean, const F0Track& noisy,
                   SnrReference reference = SnrReference::kVariance);

// Two columns per frame: value_hz voiced_flag(0/1).
void WriteF0Track(std::ostream& out, const F0Track& track);
F0Track ReadF0Track(std::istream& in);
void SaveF0Track(const std::string& path, const F0Track& track);
F0Track LoadF0Track(const std::string& path);

}  // namespace vqlab

#endif  // VQLAB_F0_H_
