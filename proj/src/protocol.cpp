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

#include "e2p/protocol.hpp"

#include <algorithm>
#include <set>

#include "e2p/common.hpp"
#include "e2p/data.hpp"
#include "e2p/rng.hpp"

namespace e2p {

std::string to_string(ProtocolName name) {
  switch (name) {
    case ProtocolName::kFullMixed: return "FULL_MIXED";
    case ProtocolName::kDataScarce: return "DATA_SCARCE";
    case ProtocolName::kCrossCtToMr: return "CROSS_CT_TO_MR";
    case ProtocolName::kCrossMrToCt: return "CROSS_MR_TO_CT";
  }
  return "UNKNOWN";
}

ProtocolName protocol_from_string(const std::string& s) {
  if (s == "FULL_MIXED") return ProtocolName::kFullMixed;
  if (s == "DATA_SCARCE") return ProtocolName::kDataScarce;
  if (s == "CROSS_CT_TO_MR") return ProtocolName::kCrossCtToMr;
  if (s == "CROSS_MR_TO_CT") return ProtocolName::kCrossMrToCt;
  throw ConfigError("unknown protocol '" + s +
                    "' (FULL_MIXED, DATA_SCARCE, CROSS_CT_TO_MR, CROSS_MR_TO_CT)");
}

void ProtocolSpec::validate() const {
  std::set<std::string> seen;
  auto check = [&seen](const std::vector<std::string>& ids, const char* which) {
    for (const auto& id : ids) {
      if (!seen.insert(id).second)
        throw ProtocolError(std::string("volume '") + id +
                            "' appears in more than one split (" + which + ")");
    }
  };
  check(train_ids, "train");
  check(val_ids, "val");
  check(test_ids, "test");
  check(ood_ids, "ood");
  if (train_ids.empty()) throw ProtocolError("empty train split");
}

namespace {

std::vector<std::string> modality_ids(const std::vector<VolumeKey>& inventory,
                                      bool want_mr) {
  std::vector<std::string> ids;
  for (const auto& k : inventory)
    if (is_mr(k.modality) == want_mr) ids.push_back(k.volume_id);
  std::sort(ids.begin(), ids.end(), natural_less);
  return ids;
}

struct SplitSizes {
  size_t train, val;
};

void take_split(std::vector<std::string> ids, uint64_t seed, SplitSizes sizes,
                ProtocolSpec& out) {
  Rng rng(seed);
  rng.shuffle(ids.begin(), ids.end());
  size_t i = 0;
  for (; i < sizes.train; ++i) out.train_ids.push_back(ids[i]);
  for (; i < sizes.train + sizes.val; ++i) out.val_ids.push_back(ids[i]);
  for (; i < ids.size(); ++i) out.test_ids.push_back(ids[i]);
}

void require_count(size_t have, size_t need, const char* modality,
                   ProtocolName name) {
  if (have < need)
    throw ProtocolError(to_string(name) + " needs at least " +
                        std::to_string(need) + " " + modality +
                        " volumes, inventory has " + std::to_string(have));
}

}  // namespace

ProtocolSpec build_protocol(ProtocolName name,
                            const std::vector<VolumeKey>& inventory,
                            uint64_t seed) {
  const std::vector<std::string> ct = modality_ids(inventory, false);
  const std::vector<std::string> mr = modality_ids(inventory, true);

  ProtocolSpec spec;
  spec.name = name;
  spec.seed = seed;

  switch (name) {
    case ProtocolName::kFullMixed: {
      require_count(ct.size(), 4, "CT", name);
      require_count(mr.size(), 4, "MR", name);
      take_split(ct, seed + 1, {ct.size() / 2, ct.size() / 4}, spec);
      take_split(mr, seed + 2, {mr.size() / 2, mr.size() / 4}, spec);
      break;
    }
    case ProtocolName::kDataScarce: {
      require_count(ct.size(), 2, "CT", name);
      require_count(mr.size(), 2, "MR", name);
      take_split(ct, seed + 1, {1, ct.size() / 4}, spec);
      take_split(mr, seed + 2, {1, mr.size() / 4}, spec);
      break;
    }
    case ProtocolName::kCrossCtToMr: {
      require_count(ct.size(), 4, "CT", name);
      require_count(mr.size(), 1, "MR", name);
      take_split(ct, seed + 1, {ct.size() / 2, ct.size() / 4}, spec);
      spec.ood_ids = mr;
      break;
    }
    case ProtocolName::kCrossMrToCt: {
      require_count(mr.size(), 4, "MR", name);
      require_count(ct.size(), 1, "CT", name);
      take_split(mr, seed + 1, {mr.size() / 2, mr.size() / 4}, spec);
      spec.ood_ids = ct;
      break;
    }
  }
  spec.validate();
  return spec;
}

nlohmann::json protocol_to_json(const ProtocolSpec& spec) {
  return nlohmann::json{{"name", to_string(spec.name)},
                        {"train", spec.train_ids},
                        {"val", spec.val_ids},
                        {"test", spec.test_ids},
                        {"ood", spec.ood_ids},
                        {"seed", spec.seed}};
}

ProtocolSpec protocol_from_json(const nlohmann::json& j) {
  ProtocolSpec spec;
  try {
    spec.name = protocol_from_string(j.at("name").get<std::string>());
    spec.train_ids = j.at("train").get<std::vector<std::string>>();
    spec.val_ids = j.at("val").get<std::vector<std::string>>();
    spec.test_ids = j.at("test").get<std::vector<std::string>>();
    spec.ood_ids = j.at("ood").get<std::vector<std::string>>();
    spec.seed = j.at("seed").get<uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed protocol block: ") + e.what());
  }
  spec.validate();
  return spec;
}

std::vector<VolumeKey> volume_keys(const std::vector<VolumeRecord>& inventory) {
  std::vector<VolumeKey> keys;
  keys.reserve(inventory.size());
  for (const auto& v : inventory) keys.push_back({v.volume_id, v.modality});
  return keys;
}

}  // namespace e2p
