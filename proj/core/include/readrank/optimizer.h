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

#ifndef READRANK_OPTIMIZER_H_
#define READRANK_OPTIMIZER_H_

#include <vector>

#include "readrank/autograd.h"

namespace readrank {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  // L2 penalty added to the gradient before the moment updates.
  double weight_decay = 5e-4;
};

// Adam over one or more parameter sets. Non-trainable parameters are left
// untouched. Gradients are consumed and zeroed by Step().
class Adam {
 public:
  Adam(std::vector<ParameterSet *> sets, const AdamConfig &config);

  void Step();
  void ZeroGrad();
  long steps() const { return steps_; }
  const AdamConfig &config() const { return config_; }

 private:
  struct Slot {
    Parameter *param;
    Matrix m;
    Matrix v;
  };
  AdamConfig config_;
  std::vector<Slot> slots_;
  long steps_ = 0;
};

}  // namespace readrank

#endif  // READRANK_OPTIMIZER_H_
