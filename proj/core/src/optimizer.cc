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

#include "readrank/optimizer.h"

#include <cmath>

namespace readrank {

Adam::Adam(std::vector<ParameterSet *> sets, const AdamConfig &config)
    : config_(config) {
  for (ParameterSet *set : sets) {
    for (std::size_t i = 0; i < set->size(); ++i) {
      Parameter &p = (*set)[i];
      slots_.push_back(Slot{&p, Matrix::Zero(p.value.rows(), p.value.cols()),
                            Matrix::Zero(p.value.rows(), p.value.cols())});
    }
  }
}

void Adam::Step() {
  ++steps_;
  const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(steps_));
  for (Slot &s : slots_) {
    Parameter &p = *s.param;
    if (!p.trainable) {
      p.ZeroGrad();
      continue;
    }
    Matrix grad = p.grad;
    if (config_.weight_decay != 0.0) grad += config_.weight_decay * p.value;
    s.m = config_.beta1 * s.m + (1.0 - config_.beta1) * grad;
    s.v = config_.beta2 * s.v + (1.0 - config_.beta2) * grad.cwiseAbs2();
    p.value.array() -= config_.lr * (s.m.array() / c1) /
                       ((s.v.array() / c2).sqrt() + config_.eps);
    p.ZeroGrad();
  }
}

void Adam::ZeroGrad() {
  for (Slot &s : slots_) s.param->ZeroGrad();
}

}  // namespace readrank
