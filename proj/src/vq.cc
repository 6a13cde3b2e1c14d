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

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include "vqlab/binary_io.h"

namespace vqlab {
namespace {

constexpr char kCodebookMagic[] = "VQCB";
constexpr uint32_t kCodebookVersion = 1;
// Rows quantized per matrix product; bounds the J x V distance buffer.
constexpr Eigen::Index kQuantizeBlock = 4096;

std::span<const double> RowSpan(const Matrix& m, Eigen::Index r) {
  return {m.data() + r * m.cols(), static_cast<size_t>(m.cols())};
}

}  // namespace

Codebook Codebook::FromPrototypes(Matrix prototypes, double decay,
                                  double laplace_eps) {
  Codebook cb;
  cb.ema_cluster_size = Vector::Ones(prototypes.rows());
  cb.ema_embed_sum = prototypes;
  cb.prototypes = std::move(prototypes);
  cb.decay = decay;
  cb.laplace_eps = laplace_eps;
  return cb;
}

Codebook Codebook::FromFrames(const Matrix& frames, int size,
                              std::mt19937_64& rng, double decay,
                              double laplace_eps) {
  if (size < 1 || frames.rows() < 1) {
    throw std::invalid_argument("Codebook::FromFrames: need size >= 1 and "
                                "at least one frame");
  }
  std::vector<Eigen::Index> order(static_cast<size_t>(frames.rows()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::shuffle(order.begin(), order.end(), rng);

  Matrix protos(size, frames.cols());
  int filled = 0;
  for (Eigen::Index r : order) {
    if (filled == size) break;
    bool duplicate = false;
    for (int k = 0; k < filled && !duplicate; ++k) {
      duplicate = protos.row(k) == frames.row(r);
    }
    if (!duplicate) protos.row(filled++) = frames.row(r);
  }
  std::uniform_int_distribution<Eigen::Index> pick(0, frames.rows() - 1);
  while (filled < size) protos.row(filled++) = frames.row(pick(rng));
  return FromPrototypes(std::move(protos), decay, laplace_eps);
}

double SquaredDistance(std::span<const double> a, std::span<const double> b) {
  double d = 0.0;
  for (size_t k = 0; k < a.size(); ++k) {
    const double diff = a[k] - b[k];
    d += diff * diff;
  }
  return d;
}

QuantizedBatch Quantize(const Matrix& h, const Matrix& prototypes) {
  if (h.cols() != prototypes.cols()) {
    throw ShapeError("Quantize: latent dim " + std::to_string(h.cols()) +
                     " != codebook dim " + std::to_string(prototypes.cols()));
  }
  if (h.rows() < 1) throw ShapeError("Quantize: empty batch");
  if (prototypes.rows() < 1) throw ShapeError("Quantize: empty codebook");

  QuantizedBatch out;
  out.h = h;
  out.q.resize(h.rows(), h.cols());
  out.indices.resize(static_cast<size_t>(h.rows()));

  const Vector proto_norms = prototypes.rowwise().squaredNorm();
  const double max_proto_norm = proto_norms.maxCoeff();
  Matrix cross;
  for (Eigen::Index start = 0; start < h.rows(); start += kQuantizeBlock) {
    const Eigen::Index n = std::min(kQuantizeBlock, h.rows() - start);
    cross.noalias() = h.middleRows(start, n) * prototypes.transpose();
    for (Eigen::Index r = 0; r < n; ++r) {
      const Eigen::Index j = start + r;
      const double hn = h.row(j).squaredNorm();
      double approx_min = std::numeric_limits<double>::infinity();
      for (Eigen::Index i = 0; i < prototypes.rows(); ++i) {
        approx_min = std::min(approx_min, hn - 2.0 * cross(r, i) + proto_norms(i));
      }
      // Expanded-form rounding error is far below this slack.
      const double slack = 1e-9 * (hn + max_proto_norm) + 1e-300;
      int best = -1;
      double best_d = std::numeric_limits<double>::infinity();
      for (Eigen::Index i = 0; i < prototypes.rows(); ++i) {
        if (hn - 2.0 * cross(r, i) + proto_norms(i) > approx_min + slack) {
          continue;
        }
        const double d = SquaredDistance(RowSpan(h, j), RowSpan(prototypes, i));
        if (d < best_d) {
          best_d = d;
          best = static_cast<int>(i);
        }
      }
      out.indices[static_cast<size_t>(j)] = best;
      out.q.row(j) = prototypes.row(best);
    }
  }
  return out;
}

QuantizedBatch Quantize(const Matrix& h, const Codebook& codebook) {
  return Quantize(h, codebook.prototypes);
}

Var StraightThrough(Tape& tape, Var h, Var q) {
  const Matrix& hv = tape.value(h);
  const Matrix& qv = tape.value(q);
  if (hv.rows() != qv.rows() || hv.cols() != qv.cols()) {
    throw ShapeError("StraightThrough: h " + ShapeString(hv) + " vs q " +
                     ShapeString(qv));
  }
  return tape.Record(qv, {h.id}, [](Tape& t, int self) {
    t.AccumulateGrad(t.inputs(self)[0], t.grad(self));
  });
}

Var VqLoss(Tape& tape, Var h, Var q) {
  return SumSquares(tape, Sub(tape, StopGradient(tape, h), q));
}

Var CommitmentLoss(Tape& tape, Var h, Var q) {
  return SumSquares(tape, Sub(tape, h, StopGradient(tape, q)));
}

double VqLossValue(const Matrix& h, const Matrix& q) {
  if (h.rows() != q.rows() || h.cols() != q.cols()) {
    throw ShapeError("VqLossValue: h " + ShapeString(h) + " vs q " +
                     ShapeString(q));
  }
  return (h - q).squaredNorm();
}

double CommitmentLossValue(const Matrix& h, const Matrix& q) {
  return VqLossValue(h, q);
}

LossBreakdown CombineLosses(double task, double l_vq, double l_vq_reg,
                            double beta) {
  if (!(beta >= 0.0)) throw std::invalid_argument("CombineLosses: beta < 0");
  LossBreakdown b;
  b.task_loss = task;
  b.l_vq = l_vq;
  b.l_vq_reg = l_vq_reg;
  b.beta = beta;
  b.total = task + l_vq + beta * l_vq_reg;
  return b;
}

void EmaUpdate(Codebook& codebook, const Matrix& h,
               std::span<const int> indices) {
  EmaUpdate(codebook, h, indices, codebook.decay, codebook.laplace_eps);
}

void EmaUpdate(Codebook& codebook, const Matrix& h,
               std::span<const int> indices, double decay, double laplace_eps) {
  if (!(decay > 0.0 && decay < 1.0)) {
    throw std::invalid_argument("EmaUpdate: decay must lie in (0, 1)");
  }
  if (h.cols() != codebook.dim() ||
      static_cast<Eigen::Index>(indices.size()) != h.rows()) {
    throw ShapeError("EmaUpdate: h " + ShapeString(h) + " with " +
                     std::to_string(indices.size()) + " indices for a " +
                     std::to_string(codebook.size()) + "x" +
                     std::to_string(codebook.dim()) + " codebook");
  }
  const int v = codebook.size();
  Vector counts = Vector::Zero(v);
  Matrix sums = Matrix::Zero(v, codebook.dim());
  for (size_t j = 0; j < indices.size(); ++j) {
    const int i = indices[j];
    if (i < 0 || i >= v) {
      throw std::out_of_range("EmaUpdate: index " + std::to_string(i));
    }
    counts(i) += 1.0;
    sums.row(i) += h.row(static_cast<Eigen::Index>(j));
  }
  codebook.ema_cluster_size =
      decay * codebook.ema_cluster_size + (1.0 - decay) * counts;
  codebook.ema_embed_sum = decay * codebook.ema_embed_sum + (1.0 - decay) * sums;

  const double n = codebook.ema_cluster_size.sum();
  for (int i = 0; i < v; ++i) {
    const double smoothed = (codebook.ema_cluster_size(i) + laplace_eps) /
                            (n + v * laplace_eps) * n;
    codebook.prototypes.row(i) = codebook.ema_embed_sum.row(i) / smoothed;
  }
}

int DeadCodeReseed(Codebook& codebook, const Matrix& h, double threshold,
                   std::mt19937_64& rng) {
  if (!(threshold >= 0.0)) {
    throw std::invalid_argument("DeadCodeReseed: threshold < 0");
  }
  if (h.rows() == 0) return 0;
  if (h.cols() != codebook.dim()) {
    throw ShapeError("DeadCodeReseed: h " + ShapeString(h) +
                     " vs codebook dim " + std::to_string(codebook.dim()));
  }
  std::uniform_int_distribution<Eigen::Index> pick(0, h.rows() - 1);
  int replaced = 0;
  for (int i = 0; i < codebook.size(); ++i) {
    if (codebook.ema_cluster_size(i) >= threshold) continue;
    const Eigen::Index r = pick(rng);
    codebook.prototypes.row(i) = h.row(r);
    codebook.ema_embed_sum.row(i) = h.row(r);
    codebook.ema_cluster_size(i) = 1.0;
    ++replaced;
  }
  return replaced;
}

double CodebookPerplexity(std::span<const int> indices, int codebook_size) {
  if (indices.empty()) return 1.0;
  std::vector<double> counts(static_cast<size_t>(codebook_size), 0.0);
  for (int i : indices) {
    if (i < 0 || i >= codebook_size) {
      throw std::out_of_range("CodebookPerplexity: index " + std::to_string(i));
    }
    counts[static_cast<size_t>(i)] += 1.0;
  }
  const double total = static_cast<double>(indices.size());
  double entropy = 0.0;
  for (double c : counts) {
    if (c > 0.0) {
      const double p = c / total;
      entropy -= p * std::log(p);
    }
  }
  return std::exp(entropy);
}

void WriteCodebook(std::ostream& out, const Codebook& codebook) {
  WriteMagic(out, kCodebookMagic, kCodebookVersion);
  WriteU64(out, static_cast<uint64_t>(codebook.size()));
  WriteU64(out, static_cast<uint64_t>(codebook.dim()));
  WriteF64(out, codebook.decay);
  WriteF64(out, codebook.laplace_eps);
  WriteMatrix(out, codebook.prototypes);
  WriteMatrix(out, Matrix(codebook.ema_cluster_size.transpose()));
  WriteMatrix(out, codebook.ema_embed_sum);
}

Codebook ReadCodebook(std::istream& in) {
  const uint32_t version = ReadMagic(in, kCodebookMagic);
  if (version != kCodebookVersion) {
    throw FormatError("unsupported codebook version " + std::to_string(version));
  }
  const uint64_t v = ReadU64(in);
  const uint64_t d = ReadU64(in);
  Codebook cb;
  cb.decay = ReadF64(in);
  cb.laplace_eps = ReadF64(in);
  cb.prototypes = ReadMatrix(in);
  Matrix sizes = ReadMatrix(in);
  cb.ema_embed_sum = ReadMatrix(in);
  if (static_cast<uint64_t>(cb.prototypes.rows()) != v ||
      static_cast<uint64_t>(cb.prototypes.cols()) != d ||
      sizes.rows() != 1 || static_cast<uint64_t>(sizes.cols()) != v ||
      cb.ema_embed_sum.rows() != cb.prototypes.rows() ||
      cb.ema_embed_sum.cols() != cb.prototypes.cols()) {
    throw FormatError("codebook record has inconsistent shapes");
  }
  cb.ema_cluster_size = sizes.row(0).transpose();
  return cb;
}

void SaveCodebook(const std::string& path, const Codebook& codebook) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  WriteCodebook(out, codebook);
}

Codebook LoadCodebook(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  return ReadCodebook(in);
}

}  // namespace vqlab
