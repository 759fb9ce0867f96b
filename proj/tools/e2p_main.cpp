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

#include <cmath>
#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "e2p/ablation.hpp"
#include "e2p/archive.hpp"
#include "e2p/common.hpp"
#include "e2p/config.hpp"
#include "e2p/data.hpp"
#include "e2p/io.hpp"
#include "e2p/metrics.hpp"
#include "e2p/phantom.hpp"
#include "e2p/pipeline.hpp"
#include "e2p/protocol.hpp"
#include "e2p/report.hpp"
#include "e2p/trainer.hpp"
#include "e2p/volume3d.hpp"

namespace {

e2p::ExperimentConfig load_or_default(const std::string& config_path) {
  if (config_path.empty()) return e2p::ExperimentConfig{};
  return e2p::ExperimentConfig::load(config_path);
}

std::string fmt_pct(double mean, double stdev) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.1f +- %.1f", 100.0 * mean, 100.0 * stdev);
  return buf;
}

int cmd_scan(const std::string& data_root, const std::string& mr_sequence,
             const std::string& out_csv) {
  const auto entries = e2p::scan_dataset(
      data_root, e2p::modality_from_string(mr_sequence));
  e2p::write_manifest_csv(out_csv, entries);
  int ct = 0, mr = 0;
  for (const auto& e : entries) (e.modality == e2p::Modality::kCT ? ct : mr)++;
  std::cout << "scanned " << entries.size() << " volumes (" << ct << " CT, "
            << mr << " MR) -> " << out_csv << "\n";
  return 0;
}

int cmd_train(const std::string& protocol_name, const std::string& pipeline,
              const std::string& config_path, const std::string& out_dir) {
  const e2p::ProtocolName kind = e2p::protocol_from_string(protocol_name);
  e2p::ExperimentConfig cfg = load_or_default(config_path);
  if (!pipeline.empty())
    cfg.train.pipeline = e2p::pipeline_from_string(pipeline);
  const auto inventory = e2p::build_inventory(cfg.data);
  const e2p::ProtocolSpec protocol =
      e2p::build_protocol(kind, e2p::volume_keys(inventory), cfg.train.seed);
  const e2p::TrainResult result =
      e2p::train(inventory, protocol, cfg, out_dir);
  std::cout << "trained " << e2p::to_string(cfg.train.pipeline) << " on "
            << protocol_name << ": " << result.epochs_run << " epochs ("
            << (result.early_stopped ? "early stop" : "full schedule")
            << "), best val dice " << result.best_val_dice << " at epoch "
            << result.best_epoch << "\n"
            << "checkpoint: " << result.checkpoint_path.string() << "\n";
  return 0;
}

int cmd_eval(const std::string& checkpoint, const std::string& protocol_name,
             const std::string& scope_name, const std::string& out_csv,
             bool per_slice, const std::string& dump_edges) {
  e2p::LoadedCheckpoint loaded = e2p::load_checkpoint(checkpoint);
  const e2p::ExperimentConfig& cfg = loaded.pipeline->config();
  const auto inventory = e2p::build_inventory(cfg.data);

  e2p::ProtocolSpec protocol = loaded.protocol;
  if (!protocol_name.empty() &&
      e2p::protocol_from_string(protocol_name) != protocol.name) {
    protocol = e2p::build_protocol(e2p::protocol_from_string(protocol_name),
                                   e2p::volume_keys(inventory),
                                   cfg.train.seed);
  }

  const e2p::Scope scope =
      scope_name == "ood" ? e2p::Scope::kOod : e2p::Scope::kId;
  const auto& ids =
      scope == e2p::Scope::kOod ? protocol.ood_ids : protocol.test_ids;
  if (ids.empty())
    throw e2p::ProtocolError("protocol " + e2p::to_string(protocol.name) +
                             " has no " + e2p::to_string(scope) + " volumes");
  const auto volumes = e2p::select_volumes(inventory, ids);

  e2p::EvalConfig eval_cfg = cfg.eval;
  eval_cfg.per_slice = per_slice;
  const e2p::MetricReport report =
      e2p::evaluate(*loaded.pipeline, volumes, e2p::to_string(protocol.name),
                    scope, eval_cfg);
  e2p::write_metrics_csv(out_csv, report, cfg.train.pipeline);

  if (!dump_edges.empty()) {
    std::filesystem::create_directories(dump_edges);
    e2p::EdgeModule edges(cfg.edm);
    for (const auto* vol : volumes)
      for (std::size_t k = 0; k < vol->slices.size(); ++k) {
        const e2p::EdgeMap em = edges.run(vol->slices[k]);
        e2p::write_png_gray8(std::filesystem::path(dump_edges) /
                                 (vol->volume_id + "_" + std::to_string(k) +
                                  ".png"),
                             em.pixels);
      }
  }

  std::cout << e2p::to_string(protocol.name) << " " << e2p::to_string(scope)
            << " " << e2p::to_string(cfg.train.pipeline) << ": dice "
            << fmt_pct(report.summary.dice_mean, report.summary.dice_std)
            << ", iou "
            << fmt_pct(report.summary.iou_mean, report.summary.iou_std)
            << " over " << report.per_volume.size()
            << (per_slice ? " slices" : " volumes") << " -> " << out_csv
            << "\n";
  return 0;
}

int cmd_ablate(const std::string& axis_name, const std::string& config_path,
               const std::string& protocol_name, const std::string& out_dir) {
  const e2p::AblationAxis axis = e2p::ablation_axis_from_string(axis_name);
  const e2p::ProtocolName kind = e2p::protocol_from_string(protocol_name);
  e2p::ExperimentConfig cfg = load_or_default(config_path);
  const auto inventory = e2p::build_inventory(cfg.data);
  const e2p::ProtocolSpec protocol =
      e2p::build_protocol(kind, e2p::volume_keys(inventory), cfg.train.seed);
  const e2p::AblationReport report =
      e2p::run_ablation(axis, inventory, protocol, cfg, out_dir);
  for (const auto& row : report.rows) {
    std::cout << row.label << ": "
              << (row.ok ? "dice " + fmt_pct(row.dice_mean, row.dice_std)
                         : "failed: " + row.error)
              << "\n";
  }
  std::cout << "ablation csv: " << (std::filesystem::path(out_dir) /
                                    "ablation.csv").string() << "\n";
  return 0;
}

int cmd_reconstruct(const std::string& checkpoint, const std::string& volume_id,
                    const std::string& out_file, double densify_dz) {
  e2p::LoadedCheckpoint loaded = e2p::load_checkpoint(checkpoint);
  const e2p::ExperimentConfig& cfg = loaded.pipeline->config();
  const auto inventory = e2p::build_inventory(cfg.data);
  const e2p::VolumeRecord* vol = e2p::find_volume(inventory, volume_id);
  if (vol == nullptr)
    throw e2p::ProtocolError("volume '" + volume_id +
                             "' not present in inventory");

  std::vector<e2p::ImageD> masks;
  const double cut =
      std::log(cfg.eval.threshold / (1.0 - cfg.eval.threshold));
  for (const auto& slice : vol->slices) {
    const e2p::MaskLogits logits = loaded.pipeline->infer(slice);
    masks.push_back((logits.logits >= cut).cast<double>());
  }

  const Eigen::Matrix4d& m = vol->source_affine.matrix;
  const Eigen::Vector3d spacing(m.col(0).head<3>().norm(),
                                m.col(1).head<3>().norm(),
                                vol->slice_spacing);
  const Eigen::Vector3d origin = m.col(3).head<3>();
  e2p::VolumeStack stack =
      e2p::stack(masks, spacing, origin, vol->volume_id);
  if (densify_dz > 0.0) {
    bool warned = false;
    stack = e2p::densify(stack, densify_dz, &warned);
    if (warned)
      std::cout << "densify skipped: target spacing " << densify_dz
                << " mm is not finer than " << spacing.z() << " mm\n";
  }
  e2p::write_nifti(out_file, stack);
  std::cout << "reconstructed " << vol->volume_id << ": "
            << stack.voxels.size() << " slices, " << stack.foreground_count()
            << " foreground voxels, " << stack.world_volume_mm3()
            << " mm^3 -> " << out_file << "\n";
  return 0;
}

int cmd_report(const std::string& runs_dir, const std::string& out_dir) {
  const e2p::ReportBundle bundle = e2p::assemble_report(runs_dir);
  const std::string out =
      out_dir.empty() ? (std::filesystem::path(runs_dir) / "report").string()
                      : out_dir;
  e2p::write_report(bundle, out);
  std::cout << bundle.full_text() << "\nwritten to " << out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"edge-prompted liver segmentation pipeline"};
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);

  std::string data_root, mr_sequence = "MR_T1_OOP", scan_out = "manifest.csv";
  auto* scan = app.add_subcommand("scan", "index a dataset root into a manifest");
  scan->add_option("--data-root", data_root, "dataset root directory")
      ->required();
  scan->add_option("--mr-sequence", mr_sequence,
                   "MR sequence to ingest (MR_T1_IN|MR_T1_OOP|MR_T2_SPIR)");
  scan->add_option("--out", scan_out, "manifest csv path")->required();

  std::string protocol = "FULL_MIXED", pipeline, config_path, out_dir;
  auto* train = app.add_subcommand("train", "train a prompt net");
  train->add_option("--protocol", protocol,
                    "FULL_MIXED|DATA_SCARCE|CROSS_CT_TO_MR|CROSS_MR_TO_CT")
      ->required();
  train->add_option("--pipeline", pipeline,
                    "EDGE2PROMPT|IM_UNET|EM_UNET|S_UNET (default from config)");
  train->add_option("--config", config_path, "experiment config json");
  train->add_option("--out", out_dir, "run output directory")->required();

  std::string checkpoint, eval_protocol, scope = "id", eval_out, dump_edges;
  bool per_slice = false;
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint");
  eval->add_option("--checkpoint", checkpoint, "checkpoint file")->required();
  eval->add_option("--protocol", eval_protocol,
                   "override the protocol stored in the checkpoint");
  eval->add_option("--scope", scope, "id|ood")
      ->check(CLI::IsMember({"id", "ood"}));
  eval->add_option("--out", eval_out, "metrics csv path")->required();
  eval->add_flag("--per-slice", per_slice,
                 "report per-slice entries instead of per-volume");
  eval->add_option("--dump-edges", dump_edges,
                   "also write edge-map PNGs into this directory");

  std::string axis, ablate_config, ablate_out,
      ablate_protocol = "CROSS_MR_TO_CT";
  auto* ablate = app.add_subcommand("ablate", "run an ablation grid");
  ablate->add_option("--axis", axis, "loss|edge")->required();
  ablate->add_option("--config", ablate_config, "experiment config json");
  ablate->add_option("--protocol", ablate_protocol,
                     "protocol for every variant");
  ablate->add_option("--out", ablate_out, "grid output directory")->required();

  std::string rec_checkpoint, rec_volume, rec_out;
  double densify_dz = 0.0;
  auto* reconstruct =
      app.add_subcommand("reconstruct", "predict a volume and write NIfTI");
  reconstruct->add_option("--checkpoint", rec_checkpoint, "checkpoint file")
      ->required();
  reconstruct->add_option("--volume", rec_volume, "volume id")->required();
  reconstruct->add_option("--out", rec_out, "output .nii path")->required();
  reconstruct->add_option("--densify", densify_dz,
                          "interpolate to this z spacing (mm)");

  std::string runs_dir, report_out;
  auto* report = app.add_subcommand("report", "assemble tables from run csvs");
  report->add_option("--runs", runs_dir, "directory of completed runs")
      ->required();
  report->add_option("--out", report_out,
                     "table output directory (default <runs>/report)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*scan) return cmd_scan(data_root, mr_sequence, scan_out);
    if (*train) return cmd_train(protocol, pipeline, config_path, out_dir);
    if (*eval)
      return cmd_eval(checkpoint, eval_protocol, scope, eval_out, per_slice,
                      dump_edges);
    if (*ablate) return cmd_ablate(axis, ablate_config, ablate_protocol,
                                   ablate_out);
    if (*reconstruct)
      return cmd_reconstruct(rec_checkpoint, rec_volume, rec_out, densify_dz);
    if (*report) return cmd_report(runs_dir, report_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
