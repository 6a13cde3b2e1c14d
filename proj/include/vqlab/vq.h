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

// Vector-quantization bottleneck: nearest-prototype quantization, the
// straight-through gradient, codebook/commitment losses and EMA dictionary
// learning.

#ifndef VQLAB_VQ_H_
#define VQLAB_VQ_H_

#include <cstdint>
#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "vqlab/autodiff.h"

namespace vqlab {

inline constexpr double kDefaultBeta = 0.25;
inline constexpr double kDefaultEmaDecay = 0.99;
inline constexpr double kDefaultLaplaceEps = 1e-5;
inline constexpr double kDefaultDeadCodeThreshold = 1e-3;

// V prototypes of dimension D plus the EMA accumulators that define them.
struct Codebook {
  Matrix prototypes;           // V x D
  Vector ema_cluster_size;     // V
  Matrix ema_embed_sum;        // V x D
  double decay = kDefaultEmaDecay;
  double laplace_eps = kDefaultLaplaceEps;

  int size() const { return static_cast<int>(prototypes.rows()); }
  int dim() const { return static_cast<int>(prototypes.cols()); }

  // Accumulators start at (1, prototype) so that every row already satisfies
  // prototype = embed_sum / cluster_size.
  static Codebook FromPrototypes(Matrix prototypes,
                                 double decay = kDefaultEmaDecay,
                                 double laplace_eps = kDefaultLaplaceEps);
  // Picks `size` distinct rows of `frames` (or rows with replacement when
  // there are fewer distinct rows than `size`).
  static Codebook FromFrames(const Matrix& frames, int size, std::mt19937_64& rng,
                             double decay = kDefaultEmaDecay,
                             double laplace_eps = kDefaultLaplaceEps);
};

struct QuantizedBatch {
  Matrix q;                  // J x D, exact copies of codebook rows
  std::vector<int> indices;  // J
  Matrix h;                  // J x D, the continuous input
};

struct LossBreakdown {
  double task_loss = 0.0;
  double l_vq = 0.0;
  double l_vq_reg = 0.0;
  double beta = kDefaultBeta;
  double total = 0.0;
};

// Exact squared Euclidean distance, summed in index order.
double SquaredDistance(std::span<const double> a, std::span<const double> b);

// Nearest prototype of each row of h, ties to the lowest index. Candidates
// are shortlisted with a matrix product and confirmed with the exact
// per-pair distance, so the result matches exhaustive search bit for bit.
QuantizedBatch Quantize(const Matrix& h, const Matrix& prototypes);
QuantizedBatch Quantize(const Matrix& h, const Codebook& codebook);

// Forward value q, backward copies the incoming gradient onto h unchanged.
// Nothing flows to q.
Var StraightThrough(Tape& tape, Var h, Var q);

// sum_j ||sg[h_j] - q_j||^2: only q (the prototypes) gets gradient.
Var VqLoss(Tape& tape, Var h, Var q);
// sum_j ||h_j - sg[q_j]||^2: only h (the encoder) gets gradient.
Var CommitmentLoss(Tape& tape, Var h, Var q);

double VqLossValue(const Matrix& h, const Matrix& q);
double CommitmentLossValue(const Matrix& h, const Matrix& q);

LossBreakdown CombineLosses(double task, double l_vq, double l_vq_reg,
                            double beta = kDefaultBeta);

// EMA dictionary update from the frames assigned in one batch.
void EmaUpdate(Codebook& codebook, const Matrix& h,
               std::span<const int> indices);
void EmaUpdate(Codebook& codebook, const Matrix& h,
               std::span<const int> indices, double decay, double laplace_eps);

// Replaces each prototype whose cluster size fell below `threshold` with a
// uniformly drawn row of h. Returns how many were replaced.
int DeadCodeReseed(Codebook& codebook, const Matrix& h, double threshold,
                   std::mt19937_64& rng);

// exp(entropy) of the empirical code distribution, in [1, V].
double CodebookPerplexity(std::span<const int> indices, int codebook_size);

// Binary dump: 8-byte header "VQCB" + little-endian uint32 version, then the
// dimensions, hyperparameters and all matrices as raw float64.
void WriteCodebook(std::ostream& out, const Codebook& codebook);
Codebook ReadCodebook(std::istream& in);
void SaveCodebook(const std::string& path, const Codebook& codebook);
Codebook LoadCodebook(const std::string& path);

}  // namespace vqlab

#endif  // VQLAB_VQ_H_
