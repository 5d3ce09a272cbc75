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

#ifndef READRANK_CHECKPOINT_H_
#define READRANK_CHECKPOINT_H_

#include <span>
#include <string>

#include <nlohmann/json.hpp>

#include "readrank/autograd.h"

namespace readrank {

// A checkpoint is a directory holding manifest.json (metadata plus the name,
// shape and byte offset of every parameter) and params.bin (little-endian
// float64 values in manifest order).
void SaveCheckpoint(const std::string &dir, const nlohmann::ordered_json &meta,
                    std::span<const ParameterSet *const> sets);

// Returns the "meta" object. Throws DataError when the manifest is missing
// or malformed.
nlohmann::json LoadCheckpointMeta(const std::string &dir);

// Fills every parameter of `sets` from the checkpoint. Throws DataError on a
// missing parameter or a shape mismatch.
void LoadCheckpointParameters(const std::string &dir,
                              std::span<ParameterSet *const> sets);

}  // namespace readrank

#endif  // READRANK_CHECKPOINT_H_
