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

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "e2p/config.hpp"
#include "e2p/data.hpp"
#include "e2p/image.hpp"
#include "e2p/pipeline.hpp"

namespace e2p {

enum class Scope { kId, kOod };

std::string to_string(Scope scope);

struct MetricEntry {
  std::string volume_id;
  Modality modality = Modality::kUnknown;
  double dice = 0.0;
  double iou = 0.0;
};

struct MetricSummary {
  double dice_mean = 0.0, dice_std = 0.0;
  double iou_mean = 0.0, iou_std = 0.0;
};

struct MetricReport {
  std::string protocol;
  Scope scope = Scope::kId;
  std::vector<MetricEntry> per_volume;
  MetricSummary summary;

  /// Range checks plus the dice = 2*iou/(1+iou) relation per entry (1e-9).
  void validate() const;
};

/// Overlap of two binary masks: (dice, iou). Both empty returns (1, 1).
std::pair<double, double> dice_iou(const ImageD& pred, const ImageD& truth);

/// Mean and population standard deviation over entries.
MetricSummary summarize(const std::vector<MetricEntry>& entries);

/// Per-volume evaluation: every slice is predicted, thresholded, and scored;
/// a volume's Dice is the mean over its counted slices and its IoU is derived
/// from that Dice (dice/(2-dice)), keeping the per-entry relation exact.
/// Slices with empty ground truth count only when the prediction is nonempty
/// (scored 0); with per_slice, entries are slice-granular instead.
using SlicePredictor = std::function<MaskLogits(const GrayImage&)>;

MetricReport evaluate(const SlicePredictor& predict,
                      const std::vector<const VolumeRecord*>& volumes,
                      const std::string& protocol, Scope scope,
                      const EvalConfig& eval_cfg);

MetricReport evaluate(Pipeline& pipeline,
                      const std::vector<const VolumeRecord*>& volumes,
                      const std::string& protocol, Scope scope,
                      const EvalConfig& eval_cfg);

/// Arithmetic mean of the in-distribution and out-of-distribution Dice.
/// Unit-agnostic: fractions or percents, used consistently.
double mdice(double id_dice, double ood_dice);

/// Inventory lookups.
const VolumeRecord* find_volume(const std::vector<VolumeRecord>& inventory,
                                const std::string& volume_id);
std::vector<const VolumeRecord*> select_volumes(
    const std::vector<VolumeRecord>& inventory,
    const std::vector<std::string>& ids);

}  // namespace e2p
