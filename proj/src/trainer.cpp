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

#include "e2p/trainer.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>

#include "e2p/archive.hpp"
#include "e2p/common.hpp"
#include "e2p/losses.hpp"
#include "e2p/metrics.hpp"
#include "e2p/nn/adam.hpp"
#include "e2p/rng.hpp"

namespace e2p {

namespace {

struct SliceRef {
  const GrayImage* image;
  const ImageD* mask;
};

std::vector<SliceRef> collect_slices(
    const std::vector<const VolumeRecord*>& vols) {
  std::vector<SliceRef> out;
  for (const VolumeRecord* v : vols)
    for (std::size_t k = 0; k < v->slices.size(); ++k)
      out.push_back({&v->slices[k], &v->masks[k]});
  return out;
}

Eigen::ArrayXd labels_for(const std::vector<const SliceRef*>& batch) {
  const Eigen::Index hw = kWorkingSize * kWorkingSize;
  Eigen::ArrayXd labels(static_cast<Eigen::Index>(batch.size()) * hw);
  nn::Tensor<double> t(1, 1, kWorkingSize, kWorkingSize);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    nn::plane_from_image(t, 0, 0, *batch[i]->mask);
    labels.segment(static_cast<Eigen::Index>(i) * hw, hw) = t.data;
  }
  return labels;
}

std::ofstream open_csv(const std::filesystem::path& path,
                       const std::string& header) {
  std::ofstream f(path);
  if (!f) throw StartupError("cannot write " + path.string());
  f << header << "\n" << std::setprecision(12);
  return f;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, Pipeline& pipeline,
                     const ProtocolSpec& protocol,
                     const nlohmann::json& extra_meta) {
  Archive arch;
  arch.meta = nlohmann::json{{"kind", "e2p_checkpoint"},
                             {"build", build_describe()},
                             {"config", pipeline.config().to_json()},
                             {"protocol", protocol_to_json(protocol)}};
  for (auto it = extra_meta.begin(); it != extra_meta.end(); ++it)
    arch.meta[it.key()] = it.value();
  arch.tensors = snapshot_params(pipeline.prompt_net().params());
  save_archive(path, arch);
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
  Archive arch = load_archive(path);
  if (!arch.meta.contains("kind") || arch.meta["kind"] != "e2p_checkpoint")
    throw IngestionError("'" + path.string() + "' is not a model checkpoint");
  LoadedCheckpoint out;
  const ExperimentConfig cfg = ExperimentConfig::from_json(arch.meta["config"]);
  out.pipeline = std::make_unique<Pipeline>(cfg);
  restore_params(arch, out.pipeline->prompt_net().params());
  out.protocol = protocol_from_json(arch.meta["protocol"]);
  out.meta = std::move(arch.meta);
  return out;
}

TrainResult train(const std::vector<VolumeRecord>& inventory,
                  const ProtocolSpec& protocol, const ExperimentConfig& cfg,
                  const std::filesystem::path& out_dir) {
  cfg.validate();
  protocol.validate();
  std::filesystem::create_directories(out_dir);
  cfg.save(out_dir / "config.json");

  const auto train_vols = select_volumes(inventory, protocol.train_ids);
  // Protocols with tiny inventories can end up without a validation split;
  // the stopping signal then falls back to the train volumes.
  const auto val_vols = protocol.val_ids.empty()
                            ? train_vols
                            : select_volumes(inventory, protocol.val_ids);
  std::vector<SliceRef> slices = collect_slices(train_vols);
  E2P_REQUIRE(!slices.empty(), "train: no slices in training split");

  Pipeline pipeline(cfg);
  TrainResult result;
  if (pipeline.backend() != nullptr)
    result.backend_checksum_before = pipeline.backend()->checksum();

  nn::Adam<double> opt(pipeline.prompt_net().params(),
                       cfg.train.learning_rate);
  Rng rng(cfg.train.seed);
  std::vector<std::size_t> order(slices.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  std::ofstream steps_csv =
      open_csv(out_dir / "train_steps.csv",
               "epoch,step,focal,dice,log_cosh_dice,total");
  std::ofstream epochs_csv =
      open_csv(out_dir / "epochs.csv",
               "epoch,focal,dice,log_cosh_dice,total,val_dice");

  EvalConfig stop_cfg = cfg.eval;
  stop_cfg.per_slice = false;

  const Eigen::Index hw = kWorkingSize * kWorkingSize;
  result.checkpoint_path = out_dir / "checkpoint.e2p";
  double best = -1.0;
  int since_best = 0;
  std::vector<ArchiveEntry> last_stable =
      snapshot_params(pipeline.prompt_net().params());
  int last_stable_epoch = 0;

  const bool aux = cfg.train.aux_prompt_loss_weight > 0.0 &&
                   uses_backend(cfg.train.pipeline);

  for (int epoch = 1; epoch <= cfg.train.epochs; ++epoch) {
    rng.shuffle(order.begin(), order.end());
    LossBreakdown epoch_sum;
    long n_steps_epoch = 0;
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(cfg.train.batch_size)) {
      const std::size_t stop =
          std::min(order.size(),
                   start + static_cast<std::size_t>(cfg.train.batch_size));
      std::vector<const GrayImage*> images;
      std::vector<const SliceRef*> refs;
      for (std::size_t i = start; i < stop; ++i) {
        refs.push_back(&slices[order[i]]);
        images.push_back(slices[order[i]].image);
      }

      nn::Tensor<double> out = pipeline.forward(images, true);
      const Eigen::ArrayXd labels = labels_for(refs);
      const PixelBatch batch = PixelBatch::create(out.data, labels);

      Eigen::ArrayXd grad;
      LossBreakdown loss = composite_loss(
          batch, cfg.loss, &grad, cfg.loss.per_image_dice ? hw : 0);

      nn::Tensor<double> g_prompt;
      double total = loss.total;
      if (aux) {
        const PixelBatch prompt_batch =
            PixelBatch::create(pipeline.last_prompt_logits().data, labels);
        Eigen::ArrayXd aux_grad;
        const LossBreakdown aux_loss =
            composite_loss(prompt_batch, cfg.loss, &aux_grad,
                           cfg.loss.per_image_dice ? hw : 0);
        total += cfg.train.aux_prompt_loss_weight * aux_loss.total;
        g_prompt = out;  // shape donor
        g_prompt.data = cfg.train.aux_prompt_loss_weight * aux_grad;
      }

      if (!std::isfinite(total)) {
        Archive rescue;
        rescue.meta = {{"kind", "e2p_checkpoint"},
                       {"build", build_describe()},
                       {"config", cfg.to_json()},
                       {"protocol", protocol_to_json(protocol)},
                       {"epoch", last_stable_epoch},
                       {"val_dice", best},
                       {"diverged", true}};
        rescue.tensors = last_stable;
        const auto rescue_path = out_dir / "diverged.e2p";
        save_archive(rescue_path, rescue);
        throw TrainingError(
            "non-finite loss at epoch " + std::to_string(epoch) + " step " +
            std::to_string(n_steps_epoch + 1) + "; last stable state saved to " +
            rescue_path.string());
      }

      nn::Tensor<double> g_out = out;  // shape donor
      g_out.data = grad;
      opt.zero_grad();
      pipeline.backward(g_out, aux ? &g_prompt : nullptr);
      opt.step();

      ++result.steps;
      ++n_steps_epoch;
      steps_csv << epoch << "," << n_steps_epoch << "," << loss.focal << ","
                << loss.dice << "," << loss.log_cosh_dice << "," << total
                << "\n";
      epoch_sum.focal += loss.focal;
      epoch_sum.dice += loss.dice;
      epoch_sum.log_cosh_dice += loss.log_cosh_dice;
      epoch_sum.total += total;
    }

    const double inv = 1.0 / static_cast<double>(n_steps_epoch);
    const MetricReport val = evaluate(pipeline, val_vols,
                                      to_string(protocol.name), Scope::kId,
                                      stop_cfg);
    const double val_dice = val.summary.dice_mean;
    epochs_csv << epoch << "," << epoch_sum.focal * inv << ","
               << epoch_sum.dice * inv << "," << epoch_sum.log_cosh_dice * inv
               << "," << epoch_sum.total * inv << "," << val_dice << "\n";

    result.epochs_run = epoch;
    if (val_dice > best) {
      best = val_dice;
      result.best_epoch = epoch;
      result.best_val_dice = val_dice;
      since_best = 0;
      save_checkpoint(result.checkpoint_path, pipeline, protocol,
                      {{"epoch", epoch}, {"val_dice", val_dice}});
    } else if (++since_best >= cfg.train.patience) {
      result.early_stopped = true;
    }
    last_stable = snapshot_params(pipeline.prompt_net().params());
    last_stable_epoch = epoch;
    if (result.early_stopped) break;
  }

  if (pipeline.backend() != nullptr) {
    result.backend_checksum_after = pipeline.backend()->checksum();
    E2P_REQUIRE(result.backend_checksum_after == result.backend_checksum_before,
                "frozen backend changed during training");
  }
  return result;
}

}  // namespace e2p
