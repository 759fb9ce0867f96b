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

#include "e2p/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>

#include "e2p/common.hpp"

namespace e2p {

namespace {

constexpr const char* kMetricsHeader =
    "protocol,scope,pipeline,volume_id,modality,dice,iou";

std::string pct_pm(double mean, double stdev) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.1f ± %.1f", 100.0 * mean, 100.0 * stdev);
  return buf;
}

std::string pad(const std::string& s, std::size_t width) {
  // ± is two bytes in UTF-8; pad by display width, not byte count.
  std::size_t display = s.size();
  if (s.find("\xc2\xb1") != std::string::npos) --display;
  return s + std::string(display < width ? width - display : 0, ' ');
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

struct Cell {
  MetricSummary s;
  bool present = false;
};

}  // namespace

std::string display_name(PipelineKind kind) {
  switch (kind) {
    case PipelineKind::kImUnet: return "imU-Net";
    case PipelineKind::kEmUnet: return "emU-Net";
    case PipelineKind::kSUnet: return "sU-Net";
    case PipelineKind::kEdge2Prompt: return "Ours";
  }
  return "?";
}

void write_metrics_csv(const std::filesystem::path& path,
                       const MetricReport& report, PipelineKind pipeline) {
  report.validate();
  std::ofstream f(path);
  if (!f) throw StartupError("cannot write " + path.string());
  f << kMetricsHeader << "\n" << std::setprecision(12);
  for (const MetricEntry& e : report.per_volume)
    f << report.protocol << "," << to_string(report.scope) << ","
      << to_string(pipeline) << "," << e.volume_id << ","
      << to_string(e.modality) << "," << e.dice << "," << e.iou << "\n";
}

RunMetrics read_metrics_csv(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw IngestionError("cannot read " + path.string());
  std::string line;
  if (!std::getline(f, line) || line != kMetricsHeader)
    throw IngestionError("not a metrics csv: " + path.string());
  RunMetrics run;
  bool first = true;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != 7)
      throw IngestionError("malformed metrics row in " + path.string());
    if (first) {
      run.protocol = cells[0];
      run.scope = cells[1] == "OOD" ? Scope::kOod : Scope::kId;
      run.pipeline = pipeline_from_string(cells[2]);
      first = false;
    }
    MetricEntry e;
    e.volume_id = cells[3];
    e.modality = modality_from_string(cells[4]);
    e.dice = std::stod(cells[5]);
    e.iou = std::stod(cells[6]);
    run.per_volume.push_back(std::move(e));
  }
  if (run.per_volume.empty())
    throw IngestionError("metrics csv has no rows: " + path.string());
  run.summary = summarize(run.per_volume);
  return run;
}

namespace {

const std::vector<PipelineKind> kRowOrder = {
    PipelineKind::kImUnet, PipelineKind::kEmUnet, PipelineKind::kSUnet,
    PipelineKind::kEdge2Prompt};

std::string render_mixed_text(const std::map<std::string, Cell>& cells) {
  std::ostringstream out;
  out << "Segmentation performance, models trained on the mixed dataset\n"
      << "(Dice & IoU percent, mean ± std over volumes)\n\n";
  out << pad("Model", 10) << "| " << pad("FULL_MIXED Dice", 16) << "| "
      << pad("FULL_MIXED IoU", 16) << "| " << pad("DATA_SCARCE Dice", 17)
      << "| " << pad("DATA_SCARCE IoU", 16) << "\n";
  out << std::string(10, '-') << "+" << std::string(17, '-') << "+"
      << std::string(17, '-') << "+" << std::string(18, '-') << "+"
      << std::string(17, '-') << "\n";
  for (PipelineKind kind : kRowOrder) {
    auto get = [&](const std::string& proto) -> std::string {
      auto it = cells.find(to_string(kind) + "/" + proto);
      if (it == cells.end() || !it->second.present) return "--";
      return pct_pm(it->second.s.dice_mean, it->second.s.dice_std);
    };
    auto get_iou = [&](const std::string& proto) -> std::string {
      auto it = cells.find(to_string(kind) + "/" + proto);
      if (it == cells.end() || !it->second.present) return "--";
      return pct_pm(it->second.s.iou_mean, it->second.s.iou_std);
    };
    out << pad(display_name(kind), 10) << "| " << pad(get("FULL_MIXED"), 16)
        << "| " << pad(get_iou("FULL_MIXED"), 16) << "| "
        << pad(get("DATA_SCARCE"), 17) << "| "
        << pad(get_iou("DATA_SCARCE"), 16) << "\n";
  }
  return out.str();
}

std::string render_cross_text(const std::map<std::string, Cell>& cells) {
  std::ostringstream out;
  out << "Cross-modality generalization, single-modality training\n"
      << "(Dice & IoU percent, mean ± std over volumes)\n\n";
  out << pad("Model", 10) << "| " << pad("Train", 6) << "| "
      << pad("ID Dice", 13) << "| " << pad("ID IoU", 13) << "| "
      << pad("OOD Dice", 13) << "| " << pad("OOD IoU", 13) << "\n";
  out << std::string(10, '-') << "+" << std::string(7, '-') << "+"
      << std::string(14, '-') << "+" << std::string(14, '-') << "+"
      << std::string(14, '-') << "+" << std::string(14, '-') << "\n";
  for (PipelineKind kind : kRowOrder) {
    for (const std::string train : {"CT", "MR"}) {
      const std::string proto =
          train == "CT" ? "CROSS_CT_TO_MR" : "CROSS_MR_TO_CT";
      auto cell = [&](const std::string& scope, bool iou) -> std::string {
        auto it = cells.find(to_string(kind) + "/" + proto + "/" + scope);
        if (it == cells.end() || !it->second.present) return "--";
        return iou ? pct_pm(it->second.s.iou_mean, it->second.s.iou_std)
                   : pct_pm(it->second.s.dice_mean, it->second.s.dice_std);
      };
      const std::string id_dice = cell("ID", false);
      const std::string ood_dice = cell("OOD", false);
      if (id_dice == "--" && ood_dice == "--") continue;
      out << pad(display_name(kind), 10) << "| " << pad(train, 6) << "| "
          << pad(id_dice, 13) << "| " << pad(cell("ID", true), 13) << "| "
          << pad(ood_dice, 13) << "| " << pad(cell("OOD", true), 13) << "\n";
    }
  }
  return out.str();
}

std::string render_ablation_text(const AblationReport& rep,
                                 const std::string& title) {
  std::ostringstream out;
  out << title << " (" << rep.scope
      << " split, Dice & IoU percent, mean ± std over volumes)\n\n";
  out << pad("Variant", 10) << "| " << pad("Dice", 13) << "| "
      << pad("IoU", 13) << "| " << pad("Epochs", 7) << "| Seconds\n";
  out << std::string(10, '-') << "+" << std::string(14, '-') << "+"
      << std::string(14, '-') << "+" << std::string(8, '-') << "+--------\n";
  for (const AblationRow& r : rep.rows) {
    if (!r.ok) {
      out << pad(r.label, 10) << "| failed: " << r.error << "\n";
      continue;
    }
    char secs[32];
    std::snprintf(secs, sizeof secs, "%.1f", r.seconds);
    out << pad(r.label, 10) << "| " << pad(pct_pm(r.dice_mean, r.dice_std), 13)
        << "| " << pad(pct_pm(r.iou_mean, r.iou_std), 13) << "| "
        << pad(std::to_string(r.epochs_run), 7) << "| " << secs << "\n";
  }
  return out.str();
}

std::string ablation_table_csv(const AblationReport& rep) {
  std::ostringstream out;
  out << "variant,dice_mean,dice_std,iou_mean,iou_std\n"
      << std::setprecision(12);
  for (const AblationRow& r : rep.rows) {
    if (!r.ok) continue;
    out << r.label << "," << r.dice_mean << "," << r.dice_std << ","
        << r.iou_mean << "," << r.iou_std << "\n";
  }
  return out.str();
}

std::optional<double> find_row_dice(const AblationReport& rep,
                                    const std::string& label) {
  for (const AblationRow& r : rep.rows)
    if (r.label == label && r.ok) return r.dice_mean;
  return std::nullopt;
}

}  // namespace

std::string ReportBundle::full_text() const {
  std::string out;
  for (const std::string* part :
       {&mixed_table_text, &cross_table_text, &loss_ablation_text,
        &edge_ablation_text}) {
    if (part->empty()) continue;
    if (!out.empty()) out += "\n";
    out += *part;
  }
  out += "\n" + footer_text;
  return out;
}

ReportBundle assemble_report(const std::filesystem::path& runs_dir) {
  if (!std::filesystem::is_directory(runs_dir))
    throw StartupError("runs directory not found: " + runs_dir.string());

  std::vector<std::filesystem::path> csvs;
  for (const auto& entry :
       std::filesystem::recursive_directory_iterator(runs_dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".csv")
      csvs.push_back(entry.path());
  }
  std::sort(csvs.begin(), csvs.end());

  ReportBundle bundle;
  for (const auto& path : csvs) {
    std::ifstream f(path);
    std::string header;
    if (!std::getline(f, header)) continue;
    f.close();
    if (header == kMetricsHeader) {
      bundle.runs.push_back(read_metrics_csv(path));
    } else if (header.rfind("axis,protocol,scope,variant,", 0) == 0) {
      bundle.ablations.push_back(read_ablation_csv(path));
    }
  }
  if (bundle.runs.empty() && bundle.ablations.empty())
    throw StartupError("no metrics or ablation CSVs found under " +
                       runs_dir.string());

  // Later files override earlier ones for the same table cell.
  std::map<std::string, Cell> mixed, cross;
  std::ostringstream mixed_csv, cross_csv;
  mixed_csv << "model,protocol,dice_mean,dice_std,iou_mean,iou_std\n"
            << std::setprecision(12);
  cross_csv << "model,train,scope,dice_mean,dice_std,iou_mean,iou_std\n"
            << std::setprecision(12);
  bool any_mixed = false, any_cross = false;
  for (const RunMetrics& run : bundle.runs) {
    if (run.protocol == "FULL_MIXED" || run.protocol == "DATA_SCARCE") {
      if (run.scope == Scope::kId) {
        mixed[to_string(run.pipeline) + "/" + run.protocol] =
            Cell{run.summary, true};
        any_mixed = true;
      }
    } else if (run.protocol == "CROSS_CT_TO_MR" ||
               run.protocol == "CROSS_MR_TO_CT") {
      cross[to_string(run.pipeline) + "/" + run.protocol + "/" +
            to_string(run.scope)] = Cell{run.summary, true};
      any_cross = true;
    }
  }
  for (const auto& [key, cell] : mixed) {
    const auto slash = key.find('/');
    mixed_csv << display_name(pipeline_from_string(key.substr(0, slash)))
              << "," << key.substr(slash + 1) << "," << cell.s.dice_mean << ","
              << cell.s.dice_std << "," << cell.s.iou_mean << ","
              << cell.s.iou_std << "\n";
  }
  for (const auto& [key, cell] : cross) {
    const auto s1 = key.find('/');
    const auto s2 = key.find('/', s1 + 1);
    const std::string proto = key.substr(s1 + 1, s2 - s1 - 1);
    cross_csv << display_name(pipeline_from_string(key.substr(0, s1))) << ","
              << (proto == "CROSS_CT_TO_MR" ? "CT" : "MR") << ","
              << key.substr(s2 + 1) << "," << cell.s.dice_mean << ","
              << cell.s.dice_std << "," << cell.s.iou_mean << ","
              << cell.s.iou_std << "\n";
  }
  if (any_mixed) {
    bundle.mixed_table_text = render_mixed_text(mixed);
    bundle.mixed_table_csv = mixed_csv.str();
  }
  if (any_cross) {
    bundle.cross_table_text = render_cross_text(cross);
    bundle.cross_table_csv = cross_csv.str();
  }

  const AblationReport* loss_rep = nullptr;
  const AblationReport* edge_rep = nullptr;
  for (const AblationReport& rep : bundle.ablations) {
    if (rep.axis == AblationAxis::kLossTerms) loss_rep = &rep;
    else edge_rep = &rep;
  }
  if (loss_rep != nullptr) {
    bundle.loss_ablation_text =
        render_ablation_text(*loss_rep, "Loss-term ablation");
    bundle.loss_ablation_csv = ablation_table_csv(*loss_rep);
  }
  if (edge_rep != nullptr) {
    bundle.edge_ablation_text =
        render_ablation_text(*edge_rep, "Edge-detector ablation");
    bundle.edge_ablation_csv = ablation_table_csv(*edge_rep);
  }

  std::ostringstream footer;
  footer << "Notes:\n"
         << "  * std is the population standard deviation over volumes.\n"
         << "  * per-volume IoU is derived from the volume's mean slice Dice"
            " as iou = dice/(2 - dice), which keeps dice = 2*iou/(1+iou)"
            " exact per row.\n";
  // mdice lines for runs that have both an ID and an OOD summary.
  for (PipelineKind kind : kRowOrder) {
    for (const std::string proto : {"CROSS_CT_TO_MR", "CROSS_MR_TO_CT"}) {
      const auto id_it = cross.find(to_string(kind) + "/" + proto + "/ID");
      const auto ood_it = cross.find(to_string(kind) + "/" + proto + "/OOD");
      if (id_it == cross.end() || ood_it == cross.end()) continue;
      const double m = mdice(id_it->second.s.dice_mean,
                             ood_it->second.s.dice_mean);
      char buf[96];
      std::snprintf(buf, sizeof buf, "  * mdice(%s, %s) = %.1f\n",
                    display_name(kind).c_str(), proto.c_str(), 100.0 * m);
      footer << buf;
    }
  }
  if (edge_rep != nullptr) {
    const auto lap = find_row_dice(*edge_rep, "laplacian");
    const auto sob = find_row_dice(*edge_rep, "sobel");
    const auto can = find_row_dice(*edge_rep, "canny");
    footer << "  * edge-detector ordering check (soft): expected laplacian"
              " well below sobel ~ canny: ";
    if (lap && sob && can) {
      const bool much_less = *sob - *lap >= 0.05 && *can - *lap >= 0.05;
      const bool close = std::abs(*sob - *can) <= 0.05;
      char buf[96];
      std::snprintf(buf, sizeof buf,
                    "%s (laplacian %.1f, sobel %.1f, canny %.1f)\n",
                    much_less && close ? "PASS" : "WARN", 100.0 * *lap,
                    100.0 * *sob, 100.0 * *can);
      footer << buf;
    } else {
      footer << "SKIPPED (missing rows)\n";
    }
  }
  bundle.footer_text = footer.str();
  return bundle;
}

void write_report(const ReportBundle& bundle,
                  const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  auto put = [&](const std::string& name, const std::string& content) {
    if (content.empty()) return;
    std::ofstream f(out_dir / name);
    if (!f) throw StartupError("cannot write " + (out_dir / name).string());
    f << content;
  };
  put("mixed_table.txt", bundle.mixed_table_text);
  put("mixed_table.csv", bundle.mixed_table_csv);
  put("cross_table.txt", bundle.cross_table_text);
  put("cross_table.csv", bundle.cross_table_csv);
  put("loss_ablation.txt", bundle.loss_ablation_text);
  put("loss_ablation.csv", bundle.loss_ablation_csv);
  put("edge_ablation.txt", bundle.edge_ablation_text);
  put("edge_ablation.csv", bundle.edge_ablation_csv);
  put("report.txt", bundle.full_text());
}

}  // namespace e2p
