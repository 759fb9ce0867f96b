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

#include "e2p/ablation.hpp"

#include <chrono>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "e2p/common.hpp"
#include "e2p/metrics.hpp"
#include "e2p/trainer.hpp"

namespace e2p {

std::string to_string(AblationAxis axis) {
  return axis == AblationAxis::kLossTerms ? "LOSS_TERMS" : "EDGE_DETECTOR";
}

AblationAxis ablation_axis_from_string(const std::string& s) {
  if (s == "loss" || s == "LOSS_TERMS") return AblationAxis::kLossTerms;
  if (s == "edge" || s == "EDGE_DETECTOR") return AblationAxis::kEdgeDetector;
  throw ConfigError("unknown ablation axis '" + s + "' (expected loss|edge)");
}

std::vector<AblationVariant> ablation_grid(AblationAxis axis,
                                           const ExperimentConfig& base) {
  base.validate();
  std::vector<AblationVariant> grid;
  if (axis == AblationAxis::kLossTerms) {
    struct Combo {
      const char* label;
      bool f, d, lcd;
    };
    static constexpr Combo kCombos[] = {
        {"F", true, false, false},      {"D", false, true, false},
        {"LCD", false, false, true},    {"F+D", true, true, false},
        {"F+LCD", true, false, true},   {"D+LCD", false, true, true},
        {"F+D+LCD", true, true, true},
    };
    for (const Combo& c : kCombos) {
      AblationVariant v{c.label, base};
      v.config.loss.w_f = c.f ? base.loss.w_f : 0.0;
      v.config.loss.w_d = c.d ? base.loss.w_d : 0.0;
      v.config.loss.w_lcd = c.lcd ? base.loss.w_lcd : 0.0;
      grid.push_back(std::move(v));
    }
  } else {
    for (Detector det :
         {Detector::kLaplacian, Detector::kSobel, Detector::kCanny}) {
      AblationVariant v{to_string(det), base};
      v.config.edm.detector = det;
      grid.push_back(std::move(v));
    }
  }
  return grid;
}

namespace {

std::string dir_label(const std::string& label) {
  std::string out = label;
  for (char& ch : out)
    if (ch == '+') ch = '-';
  return out;
}

}  // namespace

AblationReport run_ablation(AblationAxis axis,
                            const std::vector<VolumeRecord>& inventory,
                            const ProtocolSpec& protocol,
                            const ExperimentConfig& base,
                            const std::filesystem::path& out_dir) {
  protocol.validate();
  const bool use_ood = !protocol.ood_ids.empty();
  const auto& eval_ids = use_ood ? protocol.ood_ids : protocol.test_ids;
  if (eval_ids.empty())
    throw ProtocolError("ablation: protocol has neither OOD nor test volumes");
  const auto eval_vols = select_volumes(inventory, eval_ids);

  AblationReport report;
  report.axis = axis;
  report.protocol = to_string(protocol.name);
  report.scope = use_ood ? "OOD" : "ID";
  std::filesystem::create_directories(out_dir);

  for (const AblationVariant& variant : ablation_grid(axis, base)) {
    AblationRow row;
    row.label = variant.label;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      const auto run_dir = out_dir / dir_label(variant.label);
      const TrainResult tr =
          train(inventory, protocol, variant.config, run_dir);
      LoadedCheckpoint best = load_checkpoint(tr.checkpoint_path);
      const MetricReport m =
          evaluate(*best.pipeline, eval_vols, report.protocol,
                   use_ood ? Scope::kOod : Scope::kId, variant.config.eval);
      row.ok = true;
      row.dice_mean = m.summary.dice_mean;
      row.dice_std = m.summary.dice_std;
      row.iou_mean = m.summary.iou_mean;
      row.iou_std = m.summary.iou_std;
      row.epochs_run = tr.epochs_run;
    } catch (const std::exception& e) {
      row.ok = false;
      row.error = e.what();
    }
    row.seconds = std::chrono::duration<double>(
                      std::chrono::steady_clock::now() - t0)
                      .count();
    report.rows.push_back(std::move(row));
  }
  write_ablation_csv(out_dir / "ablation.csv", report);
  return report;
}

void write_ablation_csv(const std::filesystem::path& path,
                        const AblationReport& report) {
  std::ofstream f(path);
  if (!f) throw StartupError("cannot write " + path.string());
  f << "axis,protocol,scope,variant,status,dice_mean,dice_std,iou_mean,"
       "iou_std,epochs,seconds,error\n"
    << std::setprecision(12);
  for (const AblationRow& r : report.rows) {
    std::string err = r.error;
    for (char& ch : err)
      if (ch == ',' || ch == '\n') ch = ';';
    f << to_string(report.axis) << "," << report.protocol << ","
      << report.scope << "," << r.label << "," << (r.ok ? "ok" : "failed")
      << "," << r.dice_mean << "," << r.dice_std << "," << r.iou_mean << ","
      << r.iou_std << "," << r.epochs_run << "," << r.seconds << "," << err
      << "\n";
  }
}

AblationReport read_ablation_csv(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw IngestionError("cannot read " + path.string());
  std::string line;
  if (!std::getline(f, line))
    throw IngestionError("empty ablation csv: " + path.string());
  AblationReport report;
  bool first = true;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() < 11)
      throw IngestionError("malformed ablation csv row: " + line);
    if (first) {
      report.axis = ablation_axis_from_string(cells[0]);
      report.protocol = cells[1];
      report.scope = cells[2];
      first = false;
    }
    AblationRow r;
    r.label = cells[3];
    r.ok = cells[4] == "ok";
    r.dice_mean = std::stod(cells[5]);
    r.dice_std = std::stod(cells[6]);
    r.iou_mean = std::stod(cells[7]);
    r.iou_std = std::stod(cells[8]);
    r.epochs_run = std::stoi(cells[9]);
    r.seconds = std::stod(cells[10]);
    if (cells.size() > 11) r.error = cells[11];
    report.rows.push_back(std::move(r));
  }
  if (report.rows.empty())
    throw IngestionError("ablation csv has no rows: " + path.string());
  return report;
}

}  // namespace e2p
