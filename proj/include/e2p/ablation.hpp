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
#include <vector>

#include "e2p/config.hpp"
#include "e2p/data.hpp"
#include "e2p/protocol.hpp"

namespace e2p {

enum class AblationAxis { kLossTerms, kEdgeDetector };

std::string to_string(AblationAxis axis);
AblationAxis ablation_axis_from_string(const std::string& s);  // "loss"/"edge"

struct AblationVariant {
  std::string label;
  ExperimentConfig config;  // differs from base in exactly one field group
};

/// LOSS_TERMS: F, D, LCD, F+D, F+LCD, D+LCD, F+D+LCD. Active terms keep the
/// base weights, inactive ones drop to zero.
/// EDGE_DETECTOR: laplacian, sobel, canny.
std::vector<AblationVariant> ablation_grid(AblationAxis axis,
                                           const ExperimentConfig& base);

struct AblationRow {
  std::string label;
  bool ok = false;
  std::string error;
  double dice_mean = 0.0, dice_std = 0.0;
  double iou_mean = 0.0, iou_std = 0.0;
  int epochs_run = 0;
  double seconds = 0.0;
};

struct AblationReport {
  AblationAxis axis = AblationAxis::kLossTerms;
  std::string protocol;
  std::string scope;  // which split the numbers come from
  std::vector<AblationRow> rows;
};

/// Trains and evaluates every variant in grid order. Evaluation targets the
/// protocol's OOD split when it has one, its test split otherwise. A variant
/// that throws is recorded as failed and the grid keeps going.
AblationReport run_ablation(AblationAxis axis,
                            const std::vector<VolumeRecord>& inventory,
                            const ProtocolSpec& protocol,
                            const ExperimentConfig& base,
                            const std::filesystem::path& out_dir);

void write_ablation_csv(const std::filesystem::path& path,
                        const AblationReport& report);
AblationReport read_ablation_csv(const std::filesystem::path& path);

}  // namespace e2p
