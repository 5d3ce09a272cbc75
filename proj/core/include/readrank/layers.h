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

#ifndef READRANK_LAYERS_H_
#define READRANK_LAYERS_H_

#include <random>
#include <string>
#include <vector>

#include "readrank/autograd.h"

namespace readrank {

// Uniform(-a, a) with a = sqrt(6 / (fan_in + fan_out)).
void GlorotInit(Matrix &m, std::mt19937_64 &rng);

struct Linear {
  Parameter *weight = nullptr;  // in x out
  Parameter *bias = nullptr;    // 1 x out, optional

  static Linear Create(ParameterSet &params, const std::string &name, int in,
                       int out, std::mt19937_64 &rng, bool with_bias = true);
  Var Forward(Graph &g, Var x) const;
};

struct LayerNorm {
  Parameter *gain = nullptr;
  Parameter *bias = nullptr;

  static LayerNorm Create(ParameterSet &params, const std::string &name,
                          int dim);
  Var Forward(Graph &g, Var x) const;
};

// Scaled dot-product multi-head attention with separate query, key and
// value sources and an output projection.
struct MultiHeadAttention {
  int heads = 1;
  int dim = 0;
  Linear query;
  Linear key;
  Linear value;
  Linear output;

  static MultiHeadAttention Create(ParameterSet &params,
                                   const std::string &name, int query_dim,
                                   int value_dim, int dim, int heads,
                                   std::mt19937_64 &rng);

  // queries: nq x query_dim, keys: nk x query_dim, values: nk x value_dim.
  // Returns nq x dim. When `weights` is non-null it receives the per-head
  // attention matrices (nq x nk).
  Var Forward(Graph &g, Var queries, Var keys, Var values,
              std::vector<Var> *weights = nullptr) const;
};

enum class CellType { kLstm, kGru };

// Bidirectional recurrent layer. Output row j is [forward_j, backward_j].
struct BiRnn {
  CellType cell = CellType::kLstm;
  int hidden = 0;
  Parameter *fwd_wx = nullptr;
  Parameter *fwd_wh = nullptr;
  Parameter *fwd_b = nullptr;
  Parameter *bwd_wx = nullptr;
  Parameter *bwd_wh = nullptr;
  Parameter *bwd_b = nullptr;

  static BiRnn Create(ParameterSet &params, const std::string &name,
                      CellType cell, int input, int hidden,
                      std::mt19937_64 &rng);

  // x: m x input with m >= 1 real positions. Returns m x (2 * hidden).
  Var Forward(Graph &g, Var x) const;
  // One direction over the rows of `x` in the given order.
  Var Direction(Graph &g, Var x, bool reverse) const;
};

}  // namespace readrank

#endif  // READRANK_LAYERS_H_
