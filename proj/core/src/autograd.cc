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

#include "readrank/autograd.h"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <stdexcept>

namespace readrank {

Parameter &ParameterSet::Add(const std::string &name, int rows, int cols) {
  if (Find(name) != nullptr) {
    throw std::logic_error("duplicate parameter name: " + name);
  }
  auto p = std::make_unique<Parameter>();
  p->name = name;
  p->value = Matrix::Zero(rows, cols);
  p->grad = Matrix::Zero(rows, cols);
  params_.push_back(std::move(p));
  return *params_.back();
}

Parameter *ParameterSet::Find(const std::string &name) {
  for (auto &p : params_) {
    if (p->name == name) return p.get();
  }
  return nullptr;
}

const Parameter *ParameterSet::Find(const std::string &name) const {
  for (const auto &p : params_) {
    if (p->name == name) return p.get();
  }
  return nullptr;
}

Parameter &ParameterSet::Get(const std::string &name) {
  Parameter *p = Find(name);
  if (p == nullptr) throw std::out_of_range("no parameter named " + name);
  return *p;
}

void ParameterSet::ZeroGrad() {
  for (auto &p : params_) p->ZeroGrad();
}

void ParameterSet::SetTrainable(bool trainable) {
  for (auto &p : params_) p->trainable = trainable;
}

void ParameterSet::SetTrainable(const std::string &prefix, bool trainable) {
  for (auto &p : params_) {
    if (p->name.rfind(prefix, 0) == 0) p->trainable = trainable;
  }
}

std::size_t ParameterSet::NumElements() const {
  std::size_t n = 0;
  for (const auto &p : params_) n += static_cast<std::size_t>(p->value.size());
  return n;
}

bool ParameterSet::AllFinite() const {
  for (const auto &p : params_) {
    if (!p->value.allFinite()) return false;
  }
  return true;
}

const Matrix &Var::value() const { return graph->value(id); }

double Var::scalar() const {
  const Matrix &v = value();
  assert(v.rows() == 1 && v.cols() == 1);
  return v(0, 0);
}

Var Graph::Constant(Matrix value) {
  Node n;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return Var{this, static_cast<int>(nodes_.size()) - 1};
}

Var Graph::Param(Parameter &p) {
  if (auto it = param_nodes_.find(&p); it != param_nodes_.end()) {
    return Var{this, it->second};
  }
  Node n;
  n.value = p.value;
  n.needs_grad = track_gradients_ && p.trainable;
  n.param = &p;
  nodes_.push_back(std::move(n));
  const int id = static_cast<int>(nodes_.size()) - 1;
  param_nodes_.emplace(&p, id);
  return Var{this, id};
}

Var Graph::Push(Matrix value, std::span<const Var> parents,
                BackwardFn backward) {
  Node n;
  n.value = std::move(value);
  for (const Var &p : parents) {
    assert(p.graph == this);
    if (nodes_[p.id].needs_grad) n.needs_grad = true;
  }
  if (n.needs_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var{this, static_cast<int>(nodes_.size()) - 1};
}

void Graph::Backward(Var loss) {
  if (loss.graph != this) throw std::logic_error("loss from another graph");
  if (nodes_[loss.id].value.size() != 1) {
    throw std::logic_error("Backward() requires a 1x1 loss");
  }
  for (auto &n : nodes_) {
    if (n.needs_grad) n.grad.setZero(n.value.rows(), n.value.cols());
  }
  if (!nodes_[loss.id].needs_grad) return;
  nodes_[loss.id].grad(0, 0) = 1.0;
  for (int id = loss.id; id >= 0; --id) {
    Node &n = nodes_[id];
    if (!n.needs_grad) continue;
    if (n.param != nullptr) {
      Parameter &p = *n.param;
      if (p.grad.rows() != p.value.rows() || p.grad.cols() != p.value.cols()) {
        p.ZeroGrad();
      }
      p.grad += n.grad;
    } else if (n.backward) {
      n.backward(*this, id);
    }
  }
}

void AccumulateGrad(Graph &graph, Var v, const Matrix &g) {
  if (graph.needs_grad(v.id)) graph.mutable_grad(v.id) += g;
}

namespace ad {
namespace {

void CheckSameShape(const Matrix &a, const Matrix &b, const char *op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch " +
                                std::to_string(a.rows()) + "x" +
                                std::to_string(a.cols()) + " vs " +
                                std::to_string(b.rows()) + "x" +
                                std::to_string(b.cols()));
  }
}

}  // namespace

Var MatMul(Var a, Var b) {
  const Matrix &av = a.value();
  const Matrix &bv = b.value();
  if (av.cols() != bv.rows()) {
    throw std::invalid_argument("MatMul: inner dimensions differ (" +
                                std::to_string(av.cols()) + " vs " +
                                std::to_string(bv.rows()) + ")");
  }
  Graph &g = *a.graph;
  return g.Push(av * bv, {a, b}, [a, b](Graph &g, int self) {
    const Matrix &gy = g.grad(self);
    if (g.needs_grad(a.id)) g.mutable_grad(a.id).noalias() += gy * g.value(b.id).transpose();
    if (g.needs_grad(b.id)) g.mutable_grad(b.id).noalias() += g.value(a.id).transpose() * gy;
  });
}

Var Transpose(Var a) {
  Graph &g = *a.graph;
  return g.Push(a.value().transpose(), {a}, [a](Graph &g, int self) {
    g.mutable_grad(a.id) += g.grad(self).transpose();
  });
}

Var Add(Var a, Var b) {
  CheckSameShape(a.value(), b.value(), "Add");
  Graph &g = *a.graph;
  return g.Push(a.value() + b.value(), {a, b}, [a, b](Graph &g, int self) {
    AccumulateGrad(g, a, g.grad(self));
    AccumulateGrad(g, b, g.grad(self));
  });
}

Var Sub(Var a, Var b) {
  CheckSameShape(a.value(), b.value(), "Sub");
  Graph &g = *a.graph;
  return g.Push(a.value() - b.value(), {a, b}, [a, b](Graph &g, int self) {
    AccumulateGrad(g, a, g.grad(self));
    if (g.needs_grad(b.id)) g.mutable_grad(b.id) -= g.grad(self);
  });
}

Var Mul(Var a, Var b) {
  CheckSameShape(a.value(), b.value(), "Mul");
  Graph &g = *a.graph;
  return g.Push(a.value().cwiseProduct(b.value()), {a, b},
                [a, b](Graph &g, int self) {
                  const Matrix &gy = g.grad(self);
                  if (g.needs_grad(a.id))
                    g.mutable_grad(a.id) += gy.cwiseProduct(g.value(b.id));
                  if (g.needs_grad(b.id))
                    g.mutable_grad(b.id) += gy.cwiseProduct(g.value(a.id));
                });
}

Var Scale(Var a, double s) {
  Graph &g = *a.graph;
  return g.Push(a.value() * s, {a}, [a, s](Graph &g, int self) {
    g.mutable_grad(a.id) += g.grad(self) * s;
  });
}

Var AddScalar(Var a, double s) {
  Graph &g = *a.graph;
  return g.Push(a.value().array() + s, {a}, [a](Graph &g, int self) {
    g.mutable_grad(a.id) += g.grad(self);
  });
}

Var OneMinus(Var a) {
  Graph &g = *a.graph;
  return g.Push(1.0 - a.value().array(), {a}, [a](Graph &g, int self) {
    g.mutable_grad(a.id) -= g.grad(self);
  });
}

Var AddRow(Var a, Var row) {
  const Matrix &av = a.value();
  const Matrix &rv = row.value();
  if (rv.rows() != 1 || rv.cols() != av.cols()) {
    throw std::invalid_argument("AddRow: row must be 1x" +
                                std::to_string(av.cols()));
  }
  Graph &g = *a.graph;
  Matrix out = av;
  out.rowwise() += rv.row(0);
  return g.Push(std::move(out), {a, row}, [a, row](Graph &g, int self) {
    AccumulateGrad(g, a, g.grad(self));
    if (g.needs_grad(row.id))
      g.mutable_grad(row.id) += g.grad(self).colwise().sum();
  });
}

Var MulScalarVar(Var a, Var s) {
  if (s.value().size() != 1) {
    throw std::invalid_argument("MulScalarVar: scale must be 1x1");
  }
  Graph &g = *a.graph;
  return g.Push(a.value() * s.scalar(), {a, s}, [a, s](Graph &g, int self) {
    const Matrix &gy = g.grad(self);
    if (g.needs_grad(a.id)) g.mutable_grad(a.id) += gy * g.value(s.id)(0, 0);
    if (g.needs_grad(s.id))
      g.mutable_grad(s.id)(0, 0) += gy.cwiseProduct(g.value(a.id)).sum();
  });
}

Var Sigmoid(Var a) {
  Graph &g = *a.graph;
  Matrix y = a.value().unaryExpr([](double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
  });
  return g.Push(std::move(y), {a}, [a](Graph &g, int self) {
    const Matrix &y = g.value(self);
    g.mutable_grad(a.id).array() +=
        g.grad(self).array() * y.array() * (1.0 - y.array());
  });
}

Var Tanh(Var a) {
  Graph &g = *a.graph;
  return g.Push(a.value().array().tanh(), {a}, [a](Graph &g, int self) {
    const Matrix &y = g.value(self);
    g.mutable_grad(a.id).array() +=
        g.grad(self).array() * (1.0 - y.array().square());
  });
}

Var Relu(Var a) {
  Graph &g = *a.graph;
  return g.Push(a.value().cwiseMax(0.0), {a}, [a](Graph &g, int self) {
    const Matrix &x = g.value(a.id);
    g.mutable_grad(a.id).array() +=
        (x.array() > 0.0).select(g.grad(self).array(), 0.0);
  });
}

Var Softplus(Var a) {
  Graph &g = *a.graph;
  Matrix y = a.value().unaryExpr([](double x) {
    return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
  });
  return g.Push(std::move(y), {a}, [a](Graph &g, int self) {
    const Matrix &x = g.value(a.id);
    Matrix s = x.unaryExpr([](double v) {
      if (v >= 0) return 1.0 / (1.0 + std::exp(-v));
      const double e = std::exp(v);
      return e / (1.0 + e);
    });
    g.mutable_grad(a.id) += g.grad(self).cwiseProduct(s);
  });
}

Var Exp(Var a) {
  Graph &g = *a.graph;
  return g.Push(a.value().array().exp(), {a}, [a](Graph &g, int self) {
    g.mutable_grad(a.id) += g.grad(self).cwiseProduct(g.value(self));
  });
}

Var Log(Var a, double floor) {
  Graph &g = *a.graph;
  Matrix y = a.value().cwiseMax(floor).array().log();
  return g.Push(std::move(y), {a}, [a, floor](Graph &g, int self) {
    const Matrix &x = g.value(a.id);
    g.mutable_grad(a.id).array() +=
        (x.array() > floor).select(g.grad(self).array() / x.array(), 0.0);
  });
}

Var SoftmaxRows(Var a) {
  Graph &g = *a.graph;
  Matrix y = a.value();
  for (Eigen::Index r = 0; r < y.rows(); ++r) {
    const double mx = y.row(r).maxCoeff();
    y.row(r) = (y.row(r).array() - mx).exp();
    y.row(r) /= y.row(r).sum();
  }
  return g.Push(std::move(y), {a}, [a](Graph &g, int self) {
    const Matrix &y = g.value(self);
    const Matrix &gy = g.grad(self);
    Eigen::VectorXd dots = gy.cwiseProduct(y).rowwise().sum();
    Matrix gx = y.cwiseProduct(gy);
    gx -= y.cwiseProduct(dots.replicate(1, y.cols()));
    g.mutable_grad(a.id) += gx;
  });
}

Var SoftmaxCols(Var a) { return Transpose(SoftmaxRows(Transpose(a))); }

Var LogSoftmaxRows(Var a) {
  Graph &g = *a.graph;
  Matrix y = a.value();
  for (Eigen::Index r = 0; r < y.rows(); ++r) {
    const double mx = y.row(r).maxCoeff();
    const double lse = mx + std::log((y.row(r).array() - mx).exp().sum());
    y.row(r).array() -= lse;
  }
  return g.Push(std::move(y), {a}, [a](Graph &g, int self) {
    const Matrix &y = g.value(self);
    const Matrix &gy = g.grad(self);
    Eigen::VectorXd sums = gy.rowwise().sum();
    Matrix p = y.array().exp();
    g.mutable_grad(a.id) += gy - p.cwiseProduct(sums.replicate(1, y.cols()));
  });
}

Var LayerNormRows(Var a, Var gain, Var bias, double eps) {
  const Matrix &x = a.value();
  const Eigen::Index n = x.cols();
  if (gain.value().rows() != 1 || gain.value().cols() != n ||
      bias.value().rows() != 1 || bias.value().cols() != n) {
    throw std::invalid_argument("LayerNormRows: gain/bias must be 1x" +
                                std::to_string(n));
  }
  Matrix xhat(x.rows(), n);
  Eigen::VectorXd inv_std(x.rows());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double mean = x.row(r).mean();
    const double var = (x.row(r).array() - mean).square().mean();
    inv_std(r) = 1.0 / std::sqrt(var + eps);
    xhat.row(r) = (x.row(r).array() - mean) * inv_std(r);
  }
  Matrix y = xhat;
  y.array().rowwise() *= gain.value().row(0).array();
  y.rowwise() += bias.value().row(0);
  Graph &g = *a.graph;
  return g.Push(std::move(y), {a, gain, bias},
                [a, gain, bias, xhat = std::move(xhat),
                 inv_std = std::move(inv_std)](Graph &g, int self) {
                  const Matrix &gy = g.grad(self);
                  if (g.needs_grad(gain.id))
                    g.mutable_grad(gain.id) +=
                        gy.cwiseProduct(xhat).colwise().sum();
                  if (g.needs_grad(bias.id))
                    g.mutable_grad(bias.id) += gy.colwise().sum();
                  if (g.needs_grad(a.id)) {
                    Matrix gxhat = gy;
                    gxhat.array().rowwise() *= g.value(gain.id).row(0).array();
                    const double n = static_cast<double>(gxhat.cols());
                    Matrix &ga = g.mutable_grad(a.id);
                    for (Eigen::Index r = 0; r < gxhat.rows(); ++r) {
                      const double m1 = gxhat.row(r).sum() / n;
                      const double m2 =
                          gxhat.row(r).cwiseProduct(xhat.row(r)).sum() / n;
                      ga.row(r).array() +=
                          inv_std(r) * (gxhat.row(r).array() - m1 -
                                        xhat.row(r).array() * m2);
                    }
                  }
                });
}

Var ConcatCols(std::span<const Var> parts) {
  if (parts.empty()) throw std::invalid_argument("ConcatCols: no inputs");
  Graph &g = *parts[0].graph;
  const Eigen::Index rows = parts[0].value().rows();
  Eigen::Index cols = 0;
  for (const Var &p : parts) {
    if (p.value().rows() != rows) {
      throw std::invalid_argument("ConcatCols: row counts differ");
    }
    cols += p.value().cols();
  }
  Matrix out(rows, cols);
  Eigen::Index c = 0;
  for (const Var &p : parts) {
    out.middleCols(c, p.value().cols()) = p.value();
    c += p.value().cols();
  }
  std::vector<Var> ps(parts.begin(), parts.end());
  return g.Push(std::move(out), parts, [ps](Graph &g, int self) {
    const Matrix &gy = g.grad(self);
    Eigen::Index c = 0;
    for (const Var &p : ps) {
      const Eigen::Index w = g.value(p.id).cols();
      if (g.needs_grad(p.id)) g.mutable_grad(p.id) += gy.middleCols(c, w);
      c += w;
    }
  });
}

Var ConcatRows(std::span<const Var> parts) {
  if (parts.empty()) throw std::invalid_argument("ConcatRows: no inputs");
  Graph &g = *parts[0].graph;
  const Eigen::Index cols = parts[0].value().cols();
  Eigen::Index rows = 0;
  for (const Var &p : parts) {
    if (p.value().cols() != cols) {
      throw std::invalid_argument("ConcatRows: column counts differ");
    }
    rows += p.value().rows();
  }
  Matrix out(rows, cols);
  Eigen::Index r = 0;
  for (const Var &p : parts) {
    out.middleRows(r, p.value().rows()) = p.value();
    r += p.value().rows();
  }
  std::vector<Var> ps(parts.begin(), parts.end());
  return g.Push(std::move(out), parts, [ps](Graph &g, int self) {
    const Matrix &gy = g.grad(self);
    Eigen::Index r = 0;
    for (const Var &p : ps) {
      const Eigen::Index h = g.value(p.id).rows();
      if (g.needs_grad(p.id)) g.mutable_grad(p.id) += gy.middleRows(r, h);
      r += h;
    }
  });
}

Var SliceRows(Var a, int begin, int count) {
  const Matrix &av = a.value();
  if (begin < 0 || count < 0 || begin + count > av.rows()) {
    throw std::out_of_range("SliceRows: range out of bounds");
  }
  Graph &g = *a.graph;
  return g.Push(av.middleRows(begin, count), {a},
                [a, begin, count](Graph &g, int self) {
                  g.mutable_grad(a.id).middleRows(begin, count) += g.grad(self);
                });
}

Var SliceCols(Var a, int begin, int count) {
  const Matrix &av = a.value();
  if (begin < 0 || count < 0 || begin + count > av.cols()) {
    throw std::out_of_range("SliceCols: range out of bounds");
  }
  Graph &g = *a.graph;
  return g.Push(av.middleCols(begin, count), {a},
                [a, begin, count](Graph &g, int self) {
                  g.mutable_grad(a.id).middleCols(begin, count) += g.grad(self);
                });
}

Var GatherRows(Var table, std::span<const int> ids) {
  const Matrix &t = table.value();
  Matrix out(static_cast<Eigen::Index>(ids.size()), t.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || ids[i] >= t.rows()) {
      throw std::out_of_range("GatherRows: id " + std::to_string(ids[i]) +
                              " outside table of " + std::to_string(t.rows()));
    }
    out.row(static_cast<Eigen::Index>(i)) = t.row(ids[i]);
  }
  std::vector<int> idv(ids.begin(), ids.end());
  Graph &g = *table.graph;
  return g.Push(std::move(out), {table},
                [table, idv = std::move(idv)](Graph &g, int self) {
                  const Matrix &gy = g.grad(self);
                  Matrix &gt = g.mutable_grad(table.id);
                  for (std::size_t i = 0; i < idv.size(); ++i) {
                    gt.row(idv[i]) += gy.row(static_cast<Eigen::Index>(i));
                  }
                });
}

Var ScatterRows(Var a, std::span<const int> positions, int rows) {
  const Matrix &av = a.value();
  if (static_cast<Eigen::Index>(positions.size()) != av.rows()) {
    throw std::invalid_argument("ScatterRows: one position per row required");
  }
  Matrix out = Matrix::Zero(rows, av.cols());
  for (std::size_t i = 0; i < positions.size(); ++i) {
    if (positions[i] < 0 || positions[i] >= rows) {
      throw std::out_of_range("ScatterRows: position out of range");
    }
    out.row(positions[i]) = av.row(static_cast<Eigen::Index>(i));
  }
  std::vector<int> pos(positions.begin(), positions.end());
  Graph &g = *a.graph;
  return g.Push(std::move(out), {a}, [a, pos = std::move(pos)](Graph &g,
                                                             int self) {
    const Matrix &gy = g.grad(self);
    Matrix &ga = g.mutable_grad(a.id);
    for (std::size_t i = 0; i < pos.size(); ++i) {
      ga.row(static_cast<Eigen::Index>(i)) += gy.row(pos[i]);
    }
  });
}

Var ShiftRows(Var a, int offset) {
  const Matrix &av = a.value();
  const int rows = static_cast<int>(av.rows());
  Matrix out = Matrix::Zero(rows, av.cols());
  for (int i = 0; i < rows; ++i) {
    const int src = i + offset;
    if (src >= 0 && src < rows) out.row(i) = av.row(src);
  }
  Graph &g = *a.graph;
  return g.Push(std::move(out), {a}, [a, offset, rows](Graph &g, int self) {
    const Matrix &gy = g.grad(self);
    Matrix &ga = g.mutable_grad(a.id);
    for (int i = 0; i < rows; ++i) {
      const int src = i + offset;
      if (src >= 0 && src < rows) ga.row(src) += gy.row(i);
    }
  });
}

Var Sum(Var a) {
  Graph &g = *a.graph;
  Matrix out(1, 1);
  out(0, 0) = a.value().sum();
  return g.Push(std::move(out), {a}, [a](Graph &g, int self) {
    g.mutable_grad(a.id).array() += g.grad(self)(0, 0);
  });
}

Var ColSums(Var a) {
  Graph &g = *a.graph;
  return g.Push(a.value().colwise().sum(), {a}, [a](Graph &g, int self) {
    g.mutable_grad(a.id).rowwise() += g.grad(self).row(0);
  });
}

Var RowSums(Var a) {
  Graph &g = *a.graph;
  return g.Push(a.value().rowwise().sum(), {a}, [a](Graph &g, int self) {
    g.mutable_grad(a.id).colwise() += g.grad(self).col(0);
  });
}

Var MeanRows(Var a) {
  const double n = static_cast<double>(a.value().rows());
  if (n == 0) throw std::invalid_argument("MeanRows: empty input");
  return Scale(ColSums(a), 1.0 / n);
}

Var Pick(Var a, int row, int col) {
  const Matrix &av = a.value();
  if (row < 0 || row >= av.rows() || col < 0 || col >= av.cols()) {
    throw std::out_of_range("Pick: index out of range");
  }
  Matrix out(1, 1);
  out(0, 0) = av(row, col);
  Graph &g = *a.graph;
  return g.Push(std::move(out), {a}, [a, row, col](Graph &g, int self) {
    g.mutable_grad(a.id)(row, col) += g.grad(self)(0, 0);
  });
}

}  // namespace ad
}  // namespace readrank
