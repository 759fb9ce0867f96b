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
#include <filesystem>
#include <string>

#include <json.hpp>

#include "e2p/image.hpp"
#include "e2p/imaging.hpp"
#include "e2p/losses.hpp"
#include "e2p/nn/prompt_net.hpp"
#include "e2p/segmenter.hpp"

namespace e2p {

enum class PipelineKind { kEdge2Prompt, kImUnet, kEmUnet, kSUnet };

std::string to_string(PipelineKind kind);
PipelineKind pipeline_from_string(const std::string& s);

/// True when the pipeline runs the frozen segmenter stage.
bool uses_backend(PipelineKind kind);
/// True when the pipeline starts from edge maps rather than raw images.
bool uses_edges(PipelineKind kind);

struct DataConfig {
  std::string root;  // dataset root directory; unused when synthetic
  Modality mr_sequence = Modality::kMrT1Oop;
  bool synthetic = false;
  int synthetic_ct = 4;
  int synthetic_mr = 4;
  int synthetic_slices = 3;
  uint64_t synthetic_seed = 11;

  void validate() const;
};

struct TrainConfig {
  int epochs = 250;
  int patience = 50;
  double learning_rate = 1e-3;  // constant
  int batch_size = 8;
  uint64_t seed = 1;
  PipelineKind pipeline = PipelineKind::kEdge2Prompt;
  double aux_prompt_loss_weight = 0.0;  // extra composite loss on the raw
                                        // prompt logits, off by default
  bool tanh_prompt = false;             // optional prompt squashing

  void validate() const;
};

struct EvalConfig {
  bool per_slice = false;
  double threshold = 0.5;

  void validate() const;
};

struct ExperimentConfig {
  DataConfig data;
  EdgeParams edm;
  nn::PromptNetConfig prompt_net;
  BackendConfig backend;
  LossConfig loss;
  TrainConfig train;
  EvalConfig eval;

  void validate() const;
  nlohmann::json to_json() const;

  static ExperimentConfig from_json(const nlohmann::json& j);
  /// Parses a JSON config file; unknown keys anywhere are rejected.
  static ExperimentConfig load(const std::filesystem::path& path);
  /// Persists the fully resolved snapshot (every key explicit).
  void save(const std::filesystem::path& path) const;
};

Modality modality_from_string(const std::string& s);
Detector detector_from_string(const std::string& s);

}  // namespace e2p
