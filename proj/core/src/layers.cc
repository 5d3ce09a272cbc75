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

#include "readrank/layers.h"

#include <cmath>
#include <stdexcept>

namespace readrank {

void GlorotInit(Matrix &m, std::mt19937_64 &rng) {
  const double limit =
      std::sqrt(6.0 / static_cast<double>(m.rows() + m.cols()));
  std::uniform_real_distribution<double> dist(-limit, limit);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
}

Linear Linear::Create(ParameterSet &params, const std::string &name, int in,
                      int out, std::mt19937_64 &rng, bool with_bias) {
  Linear l;
  l.weight = &params.Add(name + ".weight", in, out);
  GlorotInit(l.weight->value, rng);
  if (with_bias) l.bias = &params.Add(name + ".bias", 1, out);
  return l;
}

Var Linear::Forward(Graph &g, Var x) const {
  Var y = ad::MatMul(x, g.Param(*weight));
  if (bias != nullptr) y = ad::AddRow(y, g.Param(*bias));
  return y;
}

LayerNorm LayerNorm::Create(ParameterSet &params, const std::string &name,
                            int dim) {
  LayerNorm n;
  n.gain = &params.Add(name + ".gain", 1, dim);
  n.gain->value.setOnes();
  n.bias = &params.Add(name + ".bias", 1, dim);
  return n;
}

Var LayerNorm::Forward(Graph &g, Var x) const {
  return ad::LayerNormRows(x, g.Param(*gain), g.Param(*bias));
}

MultiHeadAttention MultiHeadAttention::Create(ParameterSet &params,
                                              const std::string &name,
                                              int query_dim, int value_dim,
                                              int dim, int heads,
                                              std::mt19937_64 &rng) {
  if (heads < 1 || dim % heads != 0) {
    throw std::invalid_argument("attention width " + std::to_string(dim) +
                                " is not divisible by " +
                                std::to_string(heads) + " heads");
  }
  MultiHeadAttention a;
  a.heads = heads;
  a.dim = dim;
  a.query = Linear::Create(params, name + ".q", query_dim, dim, rng);
  a.key = Linear::Create(params, name + ".k", query_dim, dim, rng);
  a.value = Linear::Create(params, name + ".v", value_dim, dim, rng);
  a.output = Linear::Create(params, name + ".o", dim, dim, rng);
  return a;
}

Var MultiHeadAttention::Forward(Graph &g, Var queries, Var keys, Var values,
                                std::vector<Var> *weights) const {
  if (keys.rows() != values.rows()) {
    throw std::invalid_argument("attention keys and values differ in length");
  }
  const int z = dim / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(z));
  Var q = query.Forward(g, queries);
  Var k = key.Forward(g, keys);
  Var v = value.Forward(g, values);
  std::vector<Var> outs;
  outs.reserve(static_cast<std::size_t>(heads));
  for (int h = 0; h < heads; ++h) {
    Var qh = heads == 1 ? q : ad::SliceCols(q, h * z, z);
    Var kh = heads == 1 ? k : ad::SliceCols(k, h * z, z);
    Var vh = heads == 1 ? v : ad::SliceCols(v, h * z, z);
    Var att =
        ad::SoftmaxRows(ad::Scale(ad::MatMul(qh, ad::Transpose(kh)), scale));
    if (weights != nullptr) weights->push_back(att);
    outs.push_back(ad::MatMul(att, vh));
  }
  Var joined = heads == 1 ? outs[0] : ad::ConcatCols(outs);
  return output.Forward(g, joined);
}

BiRnn BiRnn::Create(ParameterSet &params, const std::string &name,
                    CellType cell, int input, int hidden,
                    std::mt19937_64 &rng) {
  const int gates = cell == CellType::kLstm ? 4 : 3;
  BiRnn r;
  r.cell = cell;
  r.hidden = hidden;
  auto make = [&](const std::string &dir, Parameter *&wx, Parameter *&wh,
                  Parameter *&b) {
    wx = &params.Add(name + "." + dir + ".wx", input, gates * hidden);
    GlorotInit(wx->value, rng);
    wh = &params.Add(name + "." + dir + ".wh", hidden, gates * hidden);
    GlorotInit(wh->value, rng);
    b = &params.Add(name + "." + dir + ".b", 1, gates * hidden);
  };
  make("fwd", r.fwd_wx, r.fwd_wh, r.fwd_b);
  make("bwd", r.bwd_wx, r.bwd_wh, r.bwd_b);
  return r;
}

Var BiRnn::Direction(Graph &g, Var x, bool reverse) const {
  const int m = x.rows();
  const int h = hidden;
  Var wx = g.Param(reverse ? *bwd_wx : *fwd_wx);
  Var wh = g.Param(reverse ? *bwd_wh : *fwd_wh);
  Var b = g.Param(reverse ? *bwd_b : *fwd_b);
  Var projected = ad::AddRow(ad::MatMul(x, wx), b);
  std::vector<Var> states(static_cast<std::size_t>(m));
  Var h_prev;
  Var c_prev;
  for (int s = 0; s < m; ++s) {
    const int t = reverse ? m - 1 - s : s;
    Var z = ad::SliceRows(projected, t, 1);
    if (cell == CellType::kLstm) {
      if (h_prev.valid()) z = ad::Add(z, ad::MatMul(h_prev, wh));
      Var i = ad::Sigmoid(ad::SliceCols(z, 0, h));
      Var f = ad::Sigmoid(ad::SliceCols(z, h, h));
      Var cand = ad::Tanh(ad::SliceCols(z, 2 * h, h));
      Var o = ad::Sigmoid(ad::SliceCols(z, 3 * h, h));
      Var c = ad::Mul(i, cand);
      if (c_prev.valid()) c = ad::Add(c, ad::Mul(f, c_prev));
      h_prev = ad::Mul(o, ad::Tanh(c));
      c_prev = c;
    } else {
      Var zr = ad::SliceCols(z, 0, 2 * h);
      Var xn = ad::SliceCols(z, 2 * h, h);
      Var hh;
      if (h_prev.valid()) {
        hh = ad::MatMul(h_prev, wh);
        zr = ad::Add(zr, ad::SliceCols(hh, 0, 2 * h));
      }
      Var update = ad::Sigmoid(ad::SliceCols(zr, 0, h));
      Var reset = ad::Sigmoid(ad::SliceCols(zr, h, h));
      if (h_prev.valid()) {
        xn = ad::Add(xn, ad::Mul(reset, ad::SliceCols(hh, 2 * h, h)));
      }
      Var n = ad::Tanh(xn);
      Var next = ad::Mul(ad::OneMinus(update), n);
      if (h_prev.valid()) next = ad::Add(next, ad::Mul(update, h_prev));
      h_prev = next;
    }
    states[static_cast<std::size_t>(t)] = h_prev;
  }
  return ad::ConcatRows(states);
}

Var BiRnn::Forward(Graph &g, Var x) const {
  if (x.rows() < 1) throw std::invalid_argument("BiRnn: empty sequence");
  std::vector<Var> halves = {Direction(g, x, false), Direction(g, x, true)};
  return ad::ConcatCols(halves);
}

}  // namespace readrank
