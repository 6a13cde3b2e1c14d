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

#include "vqlab/autodiff.h"

#include <algorithm>
#include <cmath>
#include <memory>
#include <sstream>
#include <utility>

namespace vqlab {

std::string ShapeString(const Matrix& m) {
  std::ostringstream out;
  out << m.rows() << "x" << m.cols();
  return out.str();
}

Tensor2D::Tensor2D(Matrix v, bool requires_grad)
    : value(std::move(v)),
      grad(Matrix::Zero(value.rows(), value.cols())),
      requires_grad(requires_grad) {}

void Tensor2D::ZeroGrad() {
  if (grad.rows() != value.rows() || grad.cols() != value.cols()) {
    grad.resize(value.rows(), value.cols());
  }
  grad.setZero();
}

Var Tape::Constant(Matrix value) {
  Node node;
  node.value = std::move(value);
  nodes_.push_back(std::move(node));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Var Tape::Watch(Tensor2D& tensor) {
  Node node;
  node.value = tensor.value;
  node.bound = &tensor;
  node.needs_grad = tensor.requires_grad;
  nodes_.push_back(std::move(node));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Var Tape::Record(Matrix value, std::vector<int> inputs, BackwardFn backward) {
  Node node;
  node.value = std::move(value);
  for (int id : inputs) {
    if (id < 0 || id >= static_cast<int>(nodes_.size())) {
      throw std::out_of_range("Tape::Record: input is not on this tape");
    }
    node.needs_grad = node.needs_grad || nodes_[id].needs_grad;
  }
  node.inputs = std::move(inputs);
  if (node.needs_grad) node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

void Tape::AccumulateGrad(int id, const Matrix& g) {
  Node& node = nodes_[id];
  if (!node.needs_grad) return;
  if (node.grad.size() == 0) {
    node.grad = g;
  } else {
    node.grad += g;
  }
}

Matrix& Tape::MutableGrad(int id) {
  Node& node = nodes_[id];
  if (node.grad.size() == 0) {
    node.grad = Matrix::Zero(node.value.rows(), node.value.cols());
  }
  return node.grad;
}

void Tape::Backward(Var loss) {
  const Node& out = nodes_.at(loss.id);
  if (out.value.rows() != 1 || out.value.cols() != 1) {
    throw ShapeError("Backward: loss must be 1x1, got " +
                     ShapeString(out.value));
  }
  for (Node& node : nodes_) node.grad.resize(0, 0);
  last_backward_visits_ = 0;
  if (!out.needs_grad) return;
  nodes_[loss.id].grad = Matrix::Ones(1, 1);
  for (int id = loss.id; id >= 0; --id) {
    Node& node = nodes_[id];
    if (node.grad.size() == 0) continue;
    if (node.backward) {
      node.backward(*this, id);
      ++last_backward_visits_;
    } else if (node.bound != nullptr && node.bound->requires_grad) {
      node.bound->grad += node.grad;
    }
  }
}

Var Linear(Tape& tape, Var x, Var w, Var b) {
  const Matrix& xv = tape.value(x);
  const Matrix& wv = tape.value(w);
  const Matrix& bv = tape.value(b);
  if (xv.cols() != wv.rows() || bv.rows() != 1 || bv.cols() != wv.cols()) {
    throw ShapeError("Linear: x " + ShapeString(xv) + ", w " +
                     ShapeString(wv) + ", b " + ShapeString(bv) +
                     " do not conform");
  }
  Matrix out(xv.rows(), wv.cols());
  out.noalias() = xv * wv;
  out.rowwise() += bv.row(0);
  return tape.Record(
      std::move(out), {x.id, w.id, b.id}, [](Tape& t, int self) {
        const auto& in = t.inputs(self);
        const Matrix& g = t.grad(self);
        const int xi = in[0], wi = in[1], bi = in[2];
        if (t.needs_grad(Var{xi})) {
          Matrix gx(g.rows(), t.value(wi).rows());
          gx.noalias() = g * t.value(wi).transpose();
          t.AccumulateGrad(xi, gx);
        }
        if (t.needs_grad(Var{wi})) {
          t.MutableGrad(wi).noalias() += t.value(xi).transpose() * g;
        }
        if (t.needs_grad(Var{bi})) {
          t.MutableGrad(bi) += g.colwise().sum();
        }
      });
}

Var Relu(Tape& tape, Var x) {
  Matrix out = tape.value(x).cwiseMax(0.0);
  return tape.Record(std::move(out), {x.id}, [](Tape& t, int self) {
    const int xi = t.inputs(self)[0];
    const Matrix& xv = t.value(xi);
    Matrix g = (xv.array() > 0.0).select(t.grad(self), 0.0);
    t.AccumulateGrad(xi, g);
  });
}

Var SoftmaxCrossEntropy(Tape& tape, Var logits, std::span<const int> labels) {
  const Matrix& z = tape.value(logits);
  const Eigen::Index n = z.rows();
  const Eigen::Index c = z.cols();
  if (static_cast<Eigen::Index>(labels.size()) != n || n == 0) {
    throw ShapeError("SoftmaxCrossEntropy: " + std::to_string(labels.size()) +
                     " labels for logits " + ShapeString(z));
  }
  auto probs = std::make_shared<Matrix>(n, c);
  auto label_copy = std::make_shared<std::vector<int>>(labels.begin(),
                                                       labels.end());
  double loss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const int y = labels[i];
    if (y < 0 || y >= c) {
      throw std::out_of_range("SoftmaxCrossEntropy: label " +
                              std::to_string(y) + " outside [0, " +
                              std::to_string(c) + ")");
    }
    const double max = z.row(i).maxCoeff();
    auto shifted = (z.row(i).array() - max).eval();
    const double log_norm = std::log(shifted.exp().sum());
    probs->row(i) = (shifted - log_norm).exp().matrix();
    loss -= shifted(y) - log_norm;
  }
  Matrix out(1, 1);
  out(0, 0) = loss / static_cast<double>(n);
  return tape.Record(
      std::move(out), {logits.id}, [probs, label_copy](Tape& t, int self) {
        const int zi = t.inputs(self)[0];
        const double upstream = t.grad(self)(0, 0);
        Matrix g = *probs;
        for (size_t i = 0; i < label_copy->size(); ++i) {
          g(static_cast<Eigen::Index>(i), (*label_copy)[i]) -= 1.0;
        }
        g *= upstream / static_cast<double>(g.rows());
        t.AccumulateGrad(zi, g);
      });
}

namespace {

void RequireSameShape(const char* op, const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError(std::string(op) + ": shapes " + ShapeString(a) + " and " +
                     ShapeString(b) + " differ");
  }
}

}  // namespace

Var Add(Tape& tape, Var a, Var b) {
  RequireSameShape("Add", tape.value(a), tape.value(b));
  Matrix out = tape.value(a) + tape.value(b);
  return tape.Record(std::move(out), {a.id, b.id}, [](Tape& t, int self) {
    t.AccumulateGrad(t.inputs(self)[0], t.grad(self));
    t.AccumulateGrad(t.inputs(self)[1], t.grad(self));
  });
}

Var Sub(Tape& tape, Var a, Var b) {
  RequireSameShape("Sub", tape.value(a), tape.value(b));
  Matrix out = tape.value(a) - tape.value(b);
  return tape.Record(std::move(out), {a.id, b.id}, [](Tape& t, int self) {
    t.AccumulateGrad(t.inputs(self)[0], t.grad(self));
    t.AccumulateGrad(t.inputs(self)[1], -t.grad(self));
  });
}

Var Scale(Tape& tape, Var x, double factor) {
  Matrix out = tape.value(x) * factor;
  return tape.Record(std::move(out), {x.id}, [factor](Tape& t, int self) {
    t.AccumulateGrad(t.inputs(self)[0], t.grad(self) * factor);
  });
}

Var Sum(Tape& tape, Var x) {
  Matrix out(1, 1);
  out(0, 0) = tape.value(x).sum();
  return tape.Record(std::move(out), {x.id}, [](Tape& t, int self) {
    const int xi = t.inputs(self)[0];
    const Matrix& xv = t.value(xi);
    t.AccumulateGrad(
        xi, Matrix::Constant(xv.rows(), xv.cols(), t.grad(self)(0, 0)));
  });
}

Var SumSquares(Tape& tape, Var x) {
  Matrix out(1, 1);
  out(0, 0) = tape.value(x).squaredNorm();
  return tape.Record(std::move(out), {x.id}, [](Tape& t, int self) {
    const int xi = t.inputs(self)[0];
    t.AccumulateGrad(xi, t.value(xi) * (2.0 * t.grad(self)(0, 0)));
  });
}

Var WeightedSum(Tape& tape, Var x, const Matrix& weights) {
  RequireSameShape("WeightedSum", tape.value(x), weights);
  Matrix out(1, 1);
  out(0, 0) = tape.value(x).cwiseProduct(weights).sum();
  return tape.Record(std::move(out), {x.id}, [weights](Tape& t, int self) {
    t.AccumulateGrad(t.inputs(self)[0], weights * t.grad(self)(0, 0));
  });
}

Var StopGradient(Tape& tape, Var x) { return tape.Constant(tape.value(x)); }

Var GatherRows(Tape& tape, Var table, std::span<const int> indices) {
  const Matrix& tv = tape.value(table);
  Matrix out(static_cast<Eigen::Index>(indices.size()), tv.cols());
  for (size_t j = 0; j < indices.size(); ++j) {
    if (indices[j] < 0 || indices[j] >= tv.rows()) {
      throw std::out_of_range("GatherRows: index " +
                              std::to_string(indices[j]) + " outside table " +
                              ShapeString(tv));
    }
    out.row(static_cast<Eigen::Index>(j)) = tv.row(indices[j]);
  }
  auto idx = std::make_shared<std::vector<int>>(indices.begin(),
                                                indices.end());
  return tape.Record(std::move(out), {table.id}, [idx](Tape& t, int self) {
    const int ti = t.inputs(self)[0];
    Matrix& g = t.MutableGrad(ti);
    const Matrix& up = t.grad(self);
    for (size_t j = 0; j < idx->size(); ++j) {
      g.row((*idx)[j]) += up.row(static_cast<Eigen::Index>(j));
    }
  });
}

double GradientCheck(const ScalarFn& f, const Matrix& x, double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("GradientCheck: eps <= 0");
  Tensor2D input(x);
  Matrix analytic;
  {
    Tape tape;
    Var loss = f(tape, tape.Watch(input));
    tape.Backward(loss);
    analytic = input.grad;
  }
  auto evaluate = [&f](const Matrix& at) {
    Tape tape;
    Var loss = f(tape, tape.Constant(at));
    const Matrix& v = tape.value(loss);
    if (v.size() != 1) throw ShapeError("GradientCheck: f must return 1x1");
    return v(0, 0);
  };
  double worst = 0.0;
  Matrix probe = x;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      const double saved = probe(i, j);
      probe(i, j) = saved + eps;
      const double up = evaluate(probe);
      probe(i, j) = saved - eps;
      const double down = evaluate(probe);
      probe(i, j) = saved;
      const double numeric = (up - down) / (2.0 * eps);
      const double a = analytic(i, j);
      const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
      worst = std::max(worst, std::abs(a - numeric) / denom);
    }
  }
  return worst;
}

void AdamStep(Tensor2D& param, AdamState& state, const AdamConfig& config) {
  if (param.grad.rows() != param.rows() || param.grad.cols() != param.cols()) {
    throw ShapeError("AdamStep: grad " + ShapeString(param.grad) +
                     " vs param " + ShapeString(param.value));
  }
  if (state.m.size() == 0) {
    state.m = Matrix::Zero(param.rows(), param.cols());
    state.v = Matrix::Zero(param.rows(), param.cols());
  } else if (state.m.rows() != param.rows() ||
             state.m.cols() != param.cols()) {
    throw ShapeError("AdamStep: state " + ShapeString(state.m) +
                     " vs param " + ShapeString(param.value));
  }
  ++state.step;
  state.m = config.beta1 * state.m + (1.0 - config.beta1) * param.grad;
  state.v = config.beta2 * state.v +
            (1.0 - config.beta2) * param.grad.cwiseAbs2();
  const double c1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.step));
  param.value.array() -= config.learning_rate * (state.m.array() / c1) /
                         ((state.v.array() / c2).sqrt() + config.eps);
}

Adam::Adam(std::vector<Tensor2D*> params, AdamConfig config)
    : params_(std::move(params)), states_(params_.size()), config_(config) {}

void Adam::Step() {
  for (size_t i = 0; i < params_.size(); ++i) {
    AdamStep(*params_[i], states_[i], config_);
  }
}

void Adam::ZeroGrad() {
  for (Tensor2D* p : params_) p->ZeroGrad();
}

}  // namespace vqlab
