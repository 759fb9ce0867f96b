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

#include "e2p/metrics.hpp"

#include <cmath>

#include "e2p/common.hpp"

namespace e2p {

std::string to_string(Scope scope) {
  return scope == Scope::kId ? "ID" : "OOD";
}

std::pair<double, double> dice_iou(const ImageD& pred, const ImageD& truth) {
  E2P_REQUIRE(pred.rows() == truth.rows() && pred.cols() == truth.cols(),
              "dice_iou: shape mismatch");
  long p = 0, t = 0, both = 0;
  for (Eigen::Index i = 0; i < pred.size(); ++i) {
    const bool in_p = *(pred.data() + i) > 0.5;
    const bool in_t = *(truth.data() + i) > 0.5;
    p += in_p;
    t += in_t;
    both += in_p && in_t;
  }
  if (p + t == 0) return {1.0, 1.0};
  const double dice = 2.0 * static_cast<double>(both) /
                      static_cast<double>(p + t);
  const double uni = static_cast<double>(p + t - both);
  const double iou = static_cast<double>(both) / uni;
  return {dice, iou};
}

MetricSummary summarize(const std::vector<MetricEntry>& entries) {
  E2P_REQUIRE(!entries.empty(), "summarize: no entries");
  MetricSummary s;
  const double n = static_cast<double>(entries.size());
  for (const auto& e : entries) {
    s.dice_mean += e.dice;
    s.iou_mean += e.iou;
  }
  s.dice_mean /= n;
  s.iou_mean /= n;
  for (const auto& e : entries) {
    s.dice_std += (e.dice - s.dice_mean) * (e.dice - s.dice_mean);
    s.iou_std += (e.iou - s.iou_mean) * (e.iou - s.iou_mean);
  }
  s.dice_std = std::sqrt(s.dice_std / n);
  s.iou_std = std::sqrt(s.iou_std / n);
  return s;
}

void MetricReport::validate() const {
  E2P_REQUIRE(!per_volume.empty(), "metric report has no entries");
  for (const auto& e : per_volume) {
    E2P_REQUIRE(e.dice >= 0.0 && e.dice <= 1.0, "dice out of range");
    E2P_REQUIRE(e.iou >= 0.0 && e.iou <= 1.0, "iou out of range");
    E2P_REQUIRE(e.dice + 1e-12 >= e.iou, "dice < iou");
    const double lhs = e.dice;
    const double rhs = 2.0 * e.iou / (1.0 + e.iou);
    E2P_REQUIRE(std::abs(lhs - rhs) <= 1e-9, "dice/iou relation violated");
  }
}

namespace {

ImageD threshold_logits(const ImageD& logits, double threshold) {
  // sigmoid(z) >= t  <=>  z >= log(t/(1-t))
  const double cut = std::log(threshold / (1.0 - threshold));
  return (logits >= cut).cast<double>();
}

bool empty_mask(const ImageD& m) { return (m > 0.5).count() == 0; }

}  // namespace

MetricReport evaluate(const SlicePredictor& predict,
                      const std::vector<const VolumeRecord*>& volumes,
                      const std::string& protocol, Scope scope,
                      const EvalConfig& eval_cfg) {
  E2P_REQUIRE(!volumes.empty(), "evaluate: empty volume set");
  eval_cfg.validate();

  MetricReport report;
  report.protocol = protocol;
  report.scope = scope;

  for (const VolumeRecord* vol : volumes) {
    E2P_REQUIRE(vol != nullptr, "evaluate: null volume record");
    double dice_sum = 0.0;
    long counted = 0;
    for (std::size_t k = 0; k < vol->slices.size(); ++k) {
      const MaskLogits out = predict(vol->slices[k]);
      const ImageD pred = threshold_logits(out.logits, eval_cfg.threshold);
      const ImageD& truth = vol->masks[k];
      const bool truth_empty = empty_mask(truth);
      const bool pred_empty = empty_mask(pred);
      if (truth_empty && pred_empty) continue;
      double d = 0.0, j = 0.0;
      if (!truth_empty) {
        std::tie(d, j) = dice_iou(pred, truth);
      }  // else: spurious prediction on an empty slice scores 0
      if (eval_cfg.per_slice) {
        MetricEntry e;
        e.volume_id = vol->volume_id + "#" + std::to_string(k);
        e.modality = vol->modality;
        e.dice = d;
        e.iou = j;
        report.per_volume.push_back(e);
      } else {
        dice_sum += d;
        ++counted;
      }
    }
    if (!eval_cfg.per_slice) {
      MetricEntry e;
      e.volume_id = vol->volume_id;
      e.modality = vol->modality;
      e.dice = counted > 0 ? dice_sum / static_cast<double>(counted) : 1.0;
      e.iou = e.dice / (2.0 - e.dice);
      report.per_volume.push_back(e);
    }
  }
  E2P_REQUIRE(!report.per_volume.empty(),
              "evaluate: no scoreable slices in volume set");
  report.summary = summarize(report.per_volume);
  report.validate();
  return report;
}

MetricReport evaluate(Pipeline& pipeline,
                      const std::vector<const VolumeRecord*>& volumes,
                      const std::string& protocol, Scope scope,
                      const EvalConfig& eval_cfg) {
  return evaluate(
      [&pipeline](const GrayImage& slice) { return pipeline.infer(slice); },
      volumes, protocol, scope, eval_cfg);
}

double mdice(double id_dice, double ood_dice) {
  E2P_REQUIRE(id_dice >= 0.0 && id_dice <= 100.0, "mdice: id value out of range");
  E2P_REQUIRE(ood_dice >= 0.0 && ood_dice <= 100.0,
              "mdice: ood value out of range");
  return 0.5 * (id_dice + ood_dice);
}

const VolumeRecord* find_volume(const std::vector<VolumeRecord>& inventory,
                                const std::string& volume_id) {
  for (const auto& v : inventory) {
    if (v.volume_id == volume_id) return &v;
  }
  return nullptr;
}

std::vector<const VolumeRecord*> select_volumes(
    const std::vector<VolumeRecord>& inventory,
    const std::vector<std::string>& ids) {
  std::vector<const VolumeRecord*> out;
  out.reserve(ids.size());
  for (const auto& id : ids) {
    const VolumeRecord* v = find_volume(inventory, id);
    if (v == nullptr) {
      throw ProtocolError("volume '" + id + "' not present in inventory");
    }
    out.push_back(v);
  }
  return out;
}

}  // namespace e2p
