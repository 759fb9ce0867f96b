// Copyright 2026 The Edge2Prompt Authors
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

#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "e2p/nn/tensor.hpp"

namespace e2p {

/// On-disk tensor container:
///   bytes 0..7   magic "E2PARCH1"
///   bytes 8..15  u64 little-endian JSON length L
///   L bytes      UTF-8 JSON: {"meta": ..., "tensors": [{name, size}, ...]}
///   payload      concatenated float64 little-endian tensor data, index order
struct ArchiveEntry {
  std::string name;
  std::vector<double> data;
};

struct Archive {
  nlohmann::json meta;
  std::vector<ArchiveEntry> tensors;

  const ArchiveEntry* find(const std::string& name) const;
};

void save_archive(const std::filesystem::path& path, const Archive& archive);
Archive load_archive(const std::filesystem::path& path);

/// SHA-256 hex digest of a byte range / file.
std::string sha256_hex(const void* data, size_t len);
std::string sha256_file(const std::filesystem::path& path);

/// Digest over the concatenated little-endian bytes of every buffer in `refs`,
/// in list order. Covers both learnable parameters and running state.
std::string checksum_params(const std::vector<nn::ParamRef<double>>& refs);

/// Snapshots every referenced buffer into archive entries (meta untouched).
std::vector<ArchiveEntry> snapshot_params(
    const std::vector<nn::ParamRef<double>>& refs);

/// Restores buffers by name. Every ref must be present with a matching size;
/// extra archive entries are an error.
void restore_params(const Archive& archive,
                    const std::vector<nn::ParamRef<double>>& refs);

/// Build/version string baked in at compile time.
std::string build_describe();

}  // namespace e2p
