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

#include "readrank/checkpoint.h"

#include <bit>
#include <filesystem>
#include <fstream>
#include <unordered_map>

#include "readrank/errors.h"

namespace readrank {

static_assert(std::endian::native == std::endian::little,
              "checkpoints assume a little-endian host");

namespace fs = std::filesystem;

void SaveCheckpoint(const std::string &dir, const nlohmann::ordered_json &meta,
                    std::span<const ParameterSet *const> sets) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create checkpoint directory " + dir);
  std::ofstream bin(fs::path(dir) / "params.bin", std::ios::binary);
  if (!bin) throw DataError("cannot write " + dir + "/params.bin");

  nlohmann::ordered_json params = nlohmann::ordered_json::array();
  std::size_t offset = 0;
  for (const ParameterSet *set : sets) {
    for (std::size_t i = 0; i < set->size(); ++i) {
      const Parameter &p = (*set)[i];
      params.push_back({{"name", p.name},
                        {"shape", {p.value.rows(), p.value.cols()}},
                        {"dtype", "float64"},
                        {"offset", offset}});
      const std::size_t bytes = static_cast<std::size_t>(p.value.size()) * sizeof(double);
      bin.write(reinterpret_cast<const char *>(p.value.data()),
                static_cast<std::streamsize>(bytes));
      offset += bytes;
    }
  }
  nlohmann::ordered_json manifest;
  manifest["format"] = "readrank-checkpoint/1";
  manifest["meta"] = meta;
  manifest["parameters"] = params;
  std::ofstream out(fs::path(dir) / "manifest.json", std::ios::binary);
  if (!out) throw DataError("cannot write " + dir + "/manifest.json");
  out << manifest.dump(2) << '\n';
}

namespace {

nlohmann::json ReadManifest(const std::string &dir) {
  std::ifstream in(fs::path(dir) / "manifest.json", std::ios::binary);
  if (!in) throw DataError("no checkpoint manifest in " + dir);
  try {
    nlohmann::json j = nlohmann::json::parse(in);
    if (j.value("format", "") != "readrank-checkpoint/1") {
      throw DataError("unsupported checkpoint format in " + dir);
    }
    return j;
  } catch (const nlohmann::json::exception &e) {
    throw DataError("malformed checkpoint manifest in " + dir + ": " + e.what());
  }
}

}  // namespace

nlohmann::json LoadCheckpointMeta(const std::string &dir) {
  return ReadManifest(dir).at("meta");
}

void LoadCheckpointParameters(const std::string &dir,
                              std::span<ParameterSet *const> sets) {
  const nlohmann::json manifest = ReadManifest(dir);
  struct Entry {
    long rows, cols;
    std::size_t offset;
  };
  std::unordered_map<std::string, Entry> entries;
  try {
    for (const auto &p : manifest.at("parameters")) {
      entries[p.at("name").get<std::string>()] = {
          p.at("shape").at(0).get<long>(), p.at("shape").at(1).get<long>(),
          p.at("offset").get<std::size_t>()};
    }
  } catch (const nlohmann::json::exception &e) {
    throw DataError("malformed checkpoint manifest in " + dir + ": " + e.what());
  }
  std::ifstream bin(fs::path(dir) / "params.bin", std::ios::binary);
  if (!bin) throw DataError("cannot read " + dir + "/params.bin");
  for (ParameterSet *set : sets) {
    for (std::size_t i = 0; i < set->size(); ++i) {
      Parameter &p = (*set)[i];
      auto it = entries.find(p.name);
      if (it == entries.end()) {
        throw DataError("checkpoint " + dir + " lacks parameter " + p.name);
      }
      if (it->second.rows != p.value.rows() || it->second.cols != p.value.cols()) {
        throw DataError("checkpoint parameter " + p.name + " has shape " +
                        std::to_string(it->second.rows) + "x" +
                        std::to_string(it->second.cols) + ", expected " +
                        std::to_string(p.value.rows()) + "x" +
                        std::to_string(p.value.cols()));
      }
      bin.seekg(static_cast<std::streamoff>(it->second.offset));
      bin.read(reinterpret_cast<char *>(p.value.data()),
               static_cast<std::streamsize>(p.value.size() * sizeof(double)));
      if (!bin) throw DataError("truncated checkpoint data in " + dir);
    }
  }
}

}  // namespace readrank
