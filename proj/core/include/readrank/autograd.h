// Copyright 2026 The readrank Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef READRANK_AUTOGRAD_H_
#define READRANK_AUTOGRAD_H_

// A small tape-based reverse-mode differentiation engine over dense
// row-major double matrices. Every model in the library builds its forward
// pass on a Graph; calling Backward() accumulates gradients into the
// Parameters that were bound with Graph::Param().

#include <cstddef>
#include <deque>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

namespace readrank {

using Matrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVector = Eigen::Matrix<double, 1, Eigen::Dynamic>;

// A named trainable array. Parameters live outside any Graph so that their
// values and gradients persist across forward passes.
struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;
  bool trainable = true;

  void ZeroGrad() { grad.setZero(value.rows(), value.cols()); }
};

// Owns parameters with stable addresses, in insertion order.
class ParameterSet {
 public:
  ParameterSet() = default;
  ParameterSet(const ParameterSet &) = delete;
  ParameterSet &operator=(const ParameterSet &) = delete;
  ParameterSet(ParameterSet &&) = default;
  ParameterSet &operator=(ParameterSet &&) = default;

  // Adds a zero-initialized parameter. Names must be unique.
  Parameter &Add(const std::string &name, int rows, int cols);

  Parameter *Find(const std::string &name);
  const Parameter *Find(const std::string &name) const;
  Parameter &Get(const std::string &name);

  std::size_t size() const { return params_.size(); }
  Parameter &operator[](std::size_t i) { return *params_[i]; }
  const Parameter &operator[](std::size_t i) const { return *params_[i]; }

  void ZeroGrad();
  void SetTrainable(bool trainable);
  // Sets trainable on every parameter whose name starts with `prefix`.
  void SetTrainable(const std::string &prefix, bool trainable);
  std::size_t NumElements() const;
  bool AllFinite() const;

 private:
  std::vector<std::unique_ptr<Parameter>> params_;
};

class Graph;

// Handle to a node on a Graph.
struct Var {
  Graph *graph = nullptr;
  int id = -1;

  // Valid for the lifetime of the owning graph.
  const Matrix &value() const;
  double scalar() const;
  int rows() const { return static_cast<int>(value().rows()); }
  int cols() const { return static_cast<int>(value().cols()); }
  bool valid() const { return graph != nullptr && id >= 0; }
};

class Graph {
 public:
  // With `track_gradients` false no backward closures are recorded, which
  // makes inference cheaper; Backward() then becomes a no-op.
  explicit Graph(bool track_gradients = true)
      : track_gradients_(track_gradients) {}
  Graph(const Graph &) = delete;
  Graph &operator=(const Graph &) = delete;

  // A constant input; no gradient flows into it.
  Var Constant(Matrix value);
  // Binds a parameter. Gradients reach `p.grad` on Backward() when
  // `p.trainable` is set. Binding the same parameter twice returns the same
  // node.
  Var Param(Parameter &p);

  // Seeds d(loss)/d(loss) = 1 and propagates to all bound parameters.
  // `loss` must be 1x1.
  void Backward(Var loss);

  const Matrix &value(int id) const { return nodes_[id].value; }
  const Matrix &grad(int id) const { return nodes_[id].grad; }
  Matrix &mutable_grad(int id) { return nodes_[id].grad; }
  bool needs_grad(int id) const { return nodes_[id].needs_grad; }
  std::size_t size() const { return nodes_.size(); }

  // Low-level node creation used by the op library.
  using BackwardFn = std::function<void(Graph &, int self)>;
  Var Push(Matrix value, std::span<const Var> parents, BackwardFn backward);
  Var Push(Matrix value, std::initializer_list<Var> parents,
           BackwardFn backward) {
    return Push(std::move(value),
                std::span<const Var>(parents.begin(), parents.size()),
                std::move(backward));
  }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool needs_grad = false;
    Parameter *param = nullptr;
    BackwardFn backward;
  };
  std::deque<Node> nodes_;  // stable addresses as nodes are appended
  std::unordered_map<const Parameter *, int> param_nodes_;
  bool track_gradients_ = true;
};

// Adds `g` into the gradient of `v` when that node wants gradients.
void AccumulateGrad(Graph &graph, Var v, const Matrix &g);

namespace ad {

Var MatMul(Var a, Var b);
Var Transpose(Var a);
Var Add(Var a, Var b);
Var Sub(Var a, Var b);
Var Mul(Var a, Var b);  // elementwise
Var Scale(Var a, double s);
Var AddScalar(Var a, double s);
Var OneMinus(Var a);
// a (r x c) + row (1 x c) broadcast over rows.
Var AddRow(Var a, Var row);
// a (r x c) * s where s is a 1x1 node.
Var MulScalarVar(Var a, Var s);

Var Sigmoid(Var a);
Var Tanh(Var a);
Var Relu(Var a);
Var Softplus(Var a);
Var Exp(Var a);
// Natural log with inputs clamped below at `floor`; the clamped region
// passes zero gradient.
Var Log(Var a, double floor = 1e-12);

// Softmax across each row (normalizes over columns).
Var SoftmaxRows(Var a);
// Softmax down each column (normalizes over rows).
Var SoftmaxCols(Var a);
Var LogSoftmaxRows(Var a);
// Layer normalization over the feature (column) axis of each row.
Var LayerNormRows(Var a, Var gain, Var bias, double eps = 1e-5);

Var ConcatCols(std::span<const Var> parts);
Var ConcatRows(std::span<const Var> parts);
Var SliceRows(Var a, int begin, int count);
Var SliceCols(Var a, int begin, int count);
// Output row i is table row ids[i].
Var GatherRows(Var table, std::span<const int> ids);
// Places the rows of `a` at `positions` in a zero matrix of `rows` rows.
Var ScatterRows(Var a, std::span<const int> positions, int rows);
// Output row i equals input row i + offset, zero where out of range.
Var ShiftRows(Var a, int offset);

Var Sum(Var a);       // 1x1
Var ColSums(Var a);   // 1 x cols
Var RowSums(Var a);   // rows x 1
Var MeanRows(Var a);  // 1 x cols, mean over rows
Var Pick(Var a, int row, int col);  // 1x1

}  // namespace ad

}  // namespace readrank

#endif  // READRANK_AUTOGRAD_H_
