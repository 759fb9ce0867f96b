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

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "e2p/image.hpp"

namespace e2p {

enum class ProtocolName { kFullMixed, kDataScarce, kCrossCtToMr, kCrossMrToCt };

std::string to_string(ProtocolName name);
ProtocolName protocol_from_string(const std::string& s);

struct VolumeKey {
  std::string volume_id;
  Modality modality = Modality::kUnknown;
};

/// Volume-level partition. For the cross-modality protocols, ood_ids lists
/// every volume of the held-out modality; train/val/test stay within the
/// training modality.
struct ProtocolSpec {
  ProtocolName name = ProtocolName::kFullMixed;
  std::vector<std::string> train_ids, val_ids, test_ids, ood_ids;
  uint64_t seed = 0;

  void validate() const;  // pairwise disjoint, nonempty train
};

/// Deterministic split given (inventory, seed). Cardinalities per modality of
/// size n: FULL_MIXED floor(n/2)/floor(n/4)/rest; DATA_SCARCE 1/floor(n/4)/
/// rest; cross protocols apply the FULL_MIXED shape to the training modality
/// and mark every other-modality volume as OOD.
ProtocolSpec build_protocol(ProtocolName name,
                            const std::vector<VolumeKey>& inventory,
                            uint64_t seed);

nlohmann::json protocol_to_json(const ProtocolSpec& spec);
ProtocolSpec protocol_from_json(const nlohmann::json& j);

struct VolumeRecord;
std::vector<VolumeKey> volume_keys(const std::vector<VolumeRecord>& inventory);

}  // namespace e2p
