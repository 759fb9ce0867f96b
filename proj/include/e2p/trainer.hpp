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
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "e2p/config.hpp"
#include "e2p/data.hpp"
#include "e2p/pipeline.hpp"
#include "e2p/protocol.hpp"

namespace e2p {

/// Non-finite loss or another unrecoverable optimization failure.
struct TrainingError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TrainResult {
  int epochs_run = 0;
  int best_epoch = 0;  // 1-based
  double best_val_dice = 0.0;
  long long steps = 0;
  bool early_stopped = false;
  std::filesystem::path checkpoint_path;
  std::string backend_checksum_before;  // empty when no frozen backend
  std::string backend_checksum_after;
};

/// Persists the prompt net (weights plus normalization state) together with
/// the resolved config, protocol split and provenance metadata.
void save_checkpoint(const std::filesystem::path& path, Pipeline& pipeline,
                     const ProtocolSpec& protocol,
                     const nlohmann::json& extra_meta);

struct LoadedCheckpoint {
  std::unique_ptr<Pipeline> pipeline;
  ProtocolSpec protocol;
  nlohmann::json meta;
};

/// Rebuilds the pipeline from the stored config and restores every tensor.
LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

/// Optimizes the prompt net on the protocol's train volumes with Adam at a
/// constant learning rate, early stopping on validation Dice. Writes
/// into out_dir:
///   config.json       resolved experiment snapshot
///   train_steps.csv   per-step loss terms
///   epochs.csv        per-epoch means plus validation Dice
///   checkpoint.e2p    best-validation model
/// The frozen backend's checksum is asserted unchanged.
TrainResult train(const std::vector<VolumeRecord>& inventory,
                  const ProtocolSpec& protocol, const ExperimentConfig& cfg,
                  const std::filesystem::path& out_dir);

}  // namespace e2p
