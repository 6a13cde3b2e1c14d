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

#ifndef VQLAB_AUTODIFF_H_
#define VQLAB_AUTODIFF_H_

#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace vqlab {

using Matrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Formats "rows x cols" for diagnostics.
std::string ShapeString(const Matrix& m);

// A trainable 2-D tensor. The gradient buffer always has the value's shape
// and is only ever accumulated into; callers zero it explicitly.
struct Tensor2D {
  Matrix value;
  Matrix grad;
  bool requires_grad = true;

  Tensor2D() = default;
  explicit Tensor2D(Matrix v, bool requires_grad = true);

  Eigen::Index rows() const { return value.rows(); }
  Eigen::Index cols() const { return value.cols(); }
  void ZeroGrad();
};

// Handle to a node recorded on a Tape.
struct Var {
  int id = -1;
};

// Records operations in execution order, which is already a topological
// order, and replays their backward rules in reverse.
//
// Leaves bound to a Tensor2D with requires_grad set receive their gradient
// by accumulation: running Backward twice on the same tape without zeroing
// adds the gradient twice.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, int self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // A leaf that never receives gradient.
  Var Constant(Matrix value);
  // A leaf bound to `tensor`; the tensor must outlive the tape.
  Var Watch(Tensor2D& tensor);

  // Records an op. `backward` is called only if some input needs a gradient.
  Var Record(Matrix value, std::vector<int> inputs, BackwardFn backward);

  const Matrix& value(Var v) const { return nodes_.at(v.id).value; }
  // Gradient of the most recent Backward with respect to node `v`; an empty
  // matrix if no gradient reached it.
  const Matrix& grad(Var v) const { return nodes_.at(v.id).grad; }
  bool needs_grad(Var v) const { return nodes_.at(v.id).needs_grad; }

  // Adds `g` into the gradient of node `id`, allocating it on first use.
  void AccumulateGrad(int id, const Matrix& g);
  Matrix& MutableGrad(int id);

  const std::vector<int>& inputs(int id) const { return nodes_.at(id).inputs; }
  const Matrix& value(int id) const { return nodes_.at(id).value; }
  const Matrix& grad(int id) const { return nodes_.at(id).grad; }

  // Reverse sweep from a 1x1 loss. Throws ShapeError for non-scalar losses.
  void Backward(Var loss);

  size_t size() const { return nodes_.size(); }
  // Number of backward rules run by the last Backward call.
  size_t last_backward_visits() const { return last_backward_visits_; }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    std::vector<int> inputs;
    BackwardFn backward;
    Tensor2D* bound = nullptr;
    bool needs_grad = false;
  };
  std::vector<Node> nodes_;
  size_t last_backward_visits_ = 0;
};

// out = x * w + b, with b broadcast over rows.
Var Linear(Tape& tape, Var x, Var w, Var b);
// Elementwise max(0, x); the subgradient at 0 is 0.
Var Relu(Tape& tape, Var x);
// Mean over rows of -log softmax(logits)[label]. Returns a 1x1 node.
Var SoftmaxCrossEntropy(Tape& tape, Var logits, std::span<const int> labels);

Var Add(Tape& tape, Var a, Var b);
Var Sub(Tape& tape, Var a, Var b);
Var Scale(Tape& tape, Var x, double factor);
Var Sum(Tape& tape, Var x);
Var SumSquares(Tape& tape, Var x);
// Sum of x .* weights, used to reduce non-scalar ops to a scalar probe loss.
Var WeightedSum(Tape& tape, Var x, const Matrix& weights);
// Forward identity, backward zero.
Var StopGradient(Tape& tape, Var x);
// Rows of `table` selected by `indices`; backward scatters into the table.
Var GatherRows(Tape& tape, Var table, std::span<const int> indices);

// A scalar function of one matrix argument, built on a fresh tape.
using ScalarFn = std::function<Var(Tape&, Var)>;

// Worst elementwise relative error between central differences and the
// tape gradient of `f` at `x`. The denominator is max(|a|, |b|, 1e-8).
double GradientCheck(const ScalarFn& f, const Matrix& x, double eps);

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  Matrix m;
  Matrix v;
  long step = 0;
};

// One bias-corrected Adam update of `param` from its accumulated gradient.
void AdamStep(Tensor2D& param, AdamState& state, const AdamConfig& config);

class Adam {
 public:
  Adam(std::vector<Tensor2D*> params, AdamConfig config);

  void Step();
  void ZeroGrad();
  const AdamConfig& config() const { return config_; }

 private:
  std::vector<Tensor2D*> params_;
  std::vector<AdamState> states_;
  AdamConfig config_;
};

}  // namespace vqlab

#endif  // VQLAB_AUTODIFF_H_
