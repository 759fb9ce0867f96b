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

#include <algorithm>
#include <cstdio>
#include <set>
#include <string>
#include <vector>

#include <doctest.h>

#include "e2p/phantom.hpp"
#include "e2p/protocol.hpp"

namespace {

std::vector<e2p::VolumeKey> mixed_inventory(int n_ct, int n_mr) {
  std::vector<e2p::VolumeKey> keys;
  char buf[32];
  for (int i = 0; i < n_ct; ++i) {
    std::snprintf(buf, sizeof(buf), "ct_%02d", i);
    keys.push_back({buf, e2p::Modality::kCT});
  }
  for (int i = 0; i < n_mr; ++i) {
    std::snprintf(buf, sizeof(buf), "mr_%02d", i);
    keys.push_back({buf, e2p::Modality::kMrT2Spir});
  }
  return keys;
}

bool all_have_prefix(const std::vector<std::string>& ids, const char* prefix) {
  return std::all_of(ids.begin(), ids.end(), [&](const std::string& id) {
    return id.rfind(prefix, 0) == 0;
  });
}

}  // namespace

TEST_CASE("full mixed splits 40 volumes into 20/10/10") {
  auto spec = e2p::build_protocol(e2p::ProtocolName::kFullMixed,
                                  mixed_inventory(20, 20), 33);
  CHECK(spec.train_ids.size() == 20);
  CHECK(spec.val_ids.size() == 10);
  CHECK(spec.test_ids.size() == 10);
  CHECK(spec.ood_ids.empty());

  // Balanced across modalities and jointly exhaustive.
  const auto count_ct = [](const std::vector<std::string>& ids) {
    return std::count_if(ids.begin(), ids.end(), [](const std::string& id) {
      return id.rfind("ct_", 0) == 0;
    });
  };
  CHECK(count_ct(spec.train_ids) == 10);
  CHECK(count_ct(spec.val_ids) == 5);
  CHECK(count_ct(spec.test_ids) == 5);

  std::set<std::string> all;
  for (const auto& id : spec.train_ids) all.insert(id);
  for (const auto& id : spec.val_ids) all.insert(id);
  for (const auto& id : spec.test_ids) all.insert(id);
  CHECK(all.size() == 40);
}

TEST_CASE("data scarce trains on one volume per modality") {
  auto spec = e2p::build_protocol(e2p::ProtocolName::kDataScarce,
                                  mixed_inventory(20, 20), 33);
  CHECK(spec.train_ids.size() == 2);
  CHECK(spec.val_ids.size() == 10);
  CHECK(spec.test_ids.size() == 28);
  CHECK(spec.ood_ids.empty());
  CHECK(std::count_if(spec.train_ids.begin(), spec.train_ids.end(),
                      [](const std::string& id) {
                        return id.rfind("ct_", 0) == 0;
                      }) == 1);
}

TEST_CASE("cross protocols train single-modality and hold out the other") {
  auto ct2mr = e2p::build_protocol(e2p::ProtocolName::kCrossCtToMr,
                                   mixed_inventory(20, 20), 33);
  CHECK(all_have_prefix(ct2mr.train_ids, "ct_"));
  CHECK(all_have_prefix(ct2mr.val_ids, "ct_"));
  CHECK(all_have_prefix(ct2mr.test_ids, "ct_"));
  CHECK(ct2mr.train_ids.size() == 10);
  CHECK(ct2mr.val_ids.size() == 5);
  CHECK(ct2mr.test_ids.size() == 5);
  CHECK(ct2mr.ood_ids.size() == 20);
  CHECK(all_have_prefix(ct2mr.ood_ids, "mr_"));

  auto mr2ct = e2p::build_protocol(e2p::ProtocolName::kCrossMrToCt,
                                   mixed_inventory(20, 20), 33);
  CHECK(all_have_prefix(mr2ct.train_ids, "mr_"));
  CHECK(mr2ct.ood_ids.size() == 20);
  CHECK(all_have_prefix(mr2ct.ood_ids, "ct_"));
}

TEST_CASE("splits scale with uneven inventories") {
  auto spec = e2p::build_protocol(e2p::ProtocolName::kFullMixed,
                                  mixed_inventory(9, 5), 12);
  // Per modality: floor(n/2) train, floor(n/4) val, remainder test.
  CHECK(spec.train_ids.size() == 4 + 2);
  CHECK(spec.val_ids.size() == 2 + 1);
  CHECK(spec.test_ids.size() == 3 + 2);
}

TEST_CASE("splits are deterministic in the seed") {
  const auto inv = mixed_inventory(20, 20);
  auto a = e2p::build_protocol(e2p::ProtocolName::kFullMixed, inv, 42);
  auto b = e2p::build_protocol(e2p::ProtocolName::kFullMixed, inv, 42);
  CHECK(a.train_ids == b.train_ids);
  CHECK(a.val_ids == b.val_ids);
  CHECK(a.test_ids == b.test_ids);

  auto c = e2p::build_protocol(e2p::ProtocolName::kFullMixed, inv, 43);
  CHECK(a.train_ids != c.train_ids);
}

TEST_CASE("shuffling never leaks a volume into two splits") {
  for (uint64_t seed = 0; seed < 8; ++seed) {
    auto spec = e2p::build_protocol(e2p::ProtocolName::kDataScarce,
                                    mixed_inventory(11, 7), seed);
    std::set<std::string> seen;
    size_t total = 0;
    for (const auto* ids : {&spec.train_ids, &spec.val_ids, &spec.test_ids}) {
      for (const auto& id : *ids) seen.insert(id);
      total += ids->size();
    }
    CHECK(seen.size() == total);
    CHECK(total == 18);
  }
}

TEST_CASE("undersized inventories raise protocol errors naming the modality") {
  CHECK_THROWS_WITH_AS(e2p::build_protocol(e2p::ProtocolName::kFullMixed,
                                           mixed_inventory(3, 8), 1),
                       doctest::Contains("CT"), e2p::ProtocolError);
  CHECK_THROWS_AS(e2p::build_protocol(e2p::ProtocolName::kDataScarce,
                                      mixed_inventory(1, 4), 1),
                  e2p::ProtocolError);
  CHECK_THROWS_AS(e2p::build_protocol(e2p::ProtocolName::kCrossMrToCt,
                                      mixed_inventory(4, 3), 1),
                  e2p::ProtocolError);
}

TEST_CASE("spec validation rejects overlaps and empty train") {
  e2p::ProtocolSpec spec;
  spec.train_ids = {"a", "b"};
  spec.val_ids = {"b"};
  CHECK_THROWS_WITH_AS(spec.validate(),
                       doctest::Contains("more than one split"),
                       e2p::ProtocolError);

  e2p::ProtocolSpec empty;
  empty.val_ids = {"a"};
  CHECK_THROWS_WITH_AS(empty.validate(), doctest::Contains("empty train"),
                       e2p::ProtocolError);
}

TEST_CASE("protocol json round trips and rejects malformed blocks") {
  auto spec = e2p::build_protocol(e2p::ProtocolName::kCrossCtToMr,
                                  mixed_inventory(8, 6), 99);
  nlohmann::json j = e2p::protocol_to_json(spec);
  e2p::ProtocolSpec back = e2p::protocol_from_json(j);
  CHECK(back.name == spec.name);
  CHECK(back.train_ids == spec.train_ids);
  CHECK(back.val_ids == spec.val_ids);
  CHECK(back.test_ids == spec.test_ids);
  CHECK(back.ood_ids == spec.ood_ids);
  CHECK(back.seed == spec.seed);

  nlohmann::json broken = j;
  broken.erase("train");
  CHECK_THROWS_WITH_AS(e2p::protocol_from_json(broken),
                       doctest::Contains("malformed protocol block"),
                       e2p::ConfigError);
}

TEST_CASE("protocol names round trip") {
  using PN = e2p::ProtocolName;
  for (PN name : {PN::kFullMixed, PN::kDataScarce, PN::kCrossCtToMr,
                  PN::kCrossMrToCt})
    CHECK(e2p::protocol_from_string(e2p::to_string(name)) == name);
  CHECK_THROWS_AS(e2p::protocol_from_string("HOLD_ONE_OUT"), e2p::ConfigError);
}

TEST_CASE("volume_keys mirrors the inventory") {
  auto inv = e2p::make_phantom_inventory(2, 1, 1, 3);
  auto keys = e2p::volume_keys(inv);
  REQUIRE(keys.size() == 3);
  CHECK(keys[0].volume_id == inv[0].volume_id);
  CHECK(keys[2].modality == inv[2].modality);
}
