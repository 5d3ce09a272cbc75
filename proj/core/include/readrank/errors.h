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

#ifndef READRANK_ERRORS_H_
#define READRANK_ERRORS_H_

#include <stdexcept>
#include <string>

namespace readrank {

// Invalid or inconsistent configuration. Maps to CLI exit code 2.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string &what) : std::runtime_error(what) {}
};

// Malformed or insufficient input data. Maps to CLI exit code 3.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string &what) : std::runtime_error(what) {}
};

// Non-finite loss or parameters during training. Maps to CLI exit code 4.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string &what)
      : std::runtime_error(what) {}
};

}  // namespace readrank

#endif  // READRANK_ERRORS_H_
